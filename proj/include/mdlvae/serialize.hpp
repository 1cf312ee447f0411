#pragma once

#include <string>
#include <vector>

#include "mdlvae/evaluation.hpp"
#include "mdlvae/mdl_compress.hpp"
#include "mdlvae/numerics.hpp"

namespace mdlvae {

// {mean, basis (row-major d x k), rank, dl, residual_sigma}. Codes are not
// part of the document; from_json leaves them empty.
std::string compression_to_json(const CompressionResult& c);
CompressionResult compression_from_json(const std::string& text);

// Header column_prefix0..column_prefix{k-1}, 17 significant digits.
std::string matrix_to_csv(const Matrix& m, const std::string& column_prefix);
// k,model_bits,data_bits,total_bits with one row per rank.
std::string dl_scan_to_csv(const std::vector<DescriptionLength>& scan);

// {kind, label, dims, activations, beta, latent_k, encoder_layers, layers:[{w, b}],
//  scaling, recon_kind, preprocess}. VAE layers run trunk, mu head, logvar
// head, decoder.
std::string model_to_json(const ReconstructionModel& model);
ReconstructionModel model_from_json(const std::string& text);

std::string block_to_json(const ModelBlock& block, bool include_timing);
// Timing is left out unless asked for, so reruns compare byte for byte.
std::string report_to_json(const ComparisonReport& report, bool include_timing = false);
ComparisonReport report_from_json(const std::string& text);
// metric,<label a>,<label b>,t,p; t and p are blank for untested rows.
std::string report_to_csv(const ComparisonReport& report);
std::string render_report(const ComparisonReport& report);

}  // namespace mdlvae
