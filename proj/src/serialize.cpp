#include "mdlvae/serialize.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "mdlvae/error.hpp"
#include "text_io.hpp"

namespace mdlvae {

using nlohmann::json;

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(Vector(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_rows(const json& rows, std::size_t cols_if_empty) {
  if (!rows.is_array()) fail(ErrorKind::parse, "expected an array of rows");
  if (rows.empty()) return Matrix(0, cols_if_empty);
  const std::size_t cols = rows.front().size();
  Vector flat;
  for (const auto& row : rows) {
    const auto values = row.get<Vector>();
    if (values.size() != cols) fail(ErrorKind::shape, "ragged matrix rows");
    flat.insert(flat.end(), values.begin(), values.end());
  }
  return Matrix(rows.size(), cols, std::move(flat));
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

template <class Fn>
auto parse_guard(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
}

json compression_json(const CompressionResult& c) {
  return {{"mean", c.mean},
          {"basis", matrix_rows(c.basis)},
          {"rank", c.rank},
          {"dl", {{"model_bits", c.dl.model_bits}, {"data_bits", c.dl.data_bits}, {"total_bits", c.dl.total_bits}}},
          {"residual_sigma", c.residual_sigma}};
}

CompressionResult compression_from(const json& j) {
  CompressionResult c;
  c.mean = j.at("mean").get<Vector>();
  c.rank = j.at("rank").get<std::size_t>();
  c.basis = matrix_from_rows(j.at("basis"), c.rank);
  const auto& dl = j.at("dl");
  c.dl = {dl.at("model_bits").get<double>(), dl.at("data_bits").get<double>(), dl.at("total_bits").get<double>()};
  c.residual_sigma = j.at("residual_sigma").get<double>();
  if (c.basis.rows() != c.mean.size() || c.basis.cols() != c.rank || c.rank == 0) {
    fail(ErrorKind::shape, "compression document: basis must be d x rank with rank >= 1");
  }
  c.codes = Matrix(0, c.rank);
  return c;
}

json layer_json(const DenseLayer& layer) { return {{"w", matrix_rows(layer.weights)}, {"b", layer.biases}}; }

DenseLayer layer_from(const json& j, std::size_t in, std::size_t out, Activation act) {
  DenseLayer layer{matrix_from_rows(j.at("w"), out), j.at("b").get<Vector>(), act};
  if (layer.weights.rows() != in || layer.weights.cols() != out || layer.biases.size() != out) {
    fail(ErrorKind::shape, "model document: layer shape does not match dims");
  }
  return layer;
}

void append_mlp(const MlpParams& mlp, json& dims, json& acts, json& layers) {
  for (const auto& layer : mlp.layers) {
    dims.push_back(layer.out_dim());
    acts.push_back(to_string(layer.activation));
    layers.push_back(layer_json(layer));
  }
}

json scaling_json(const FeatureScaling& s) {
  if (s.empty()) return nullptr;
  return {{"offset", s.offset}, {"scale", s.scale}};
}

FeatureScaling scaling_from(const json& j) {
  if (j.is_null()) return {};
  return {j.at("offset").get<Vector>(), j.at("scale").get<Vector>()};
}

json network_json(const Network& network) {
  json dims = json::array();
  json acts = json::array();
  json layers = json::array();
  json out;
  if (const auto* ae = std::get_if<AeModel>(&network)) {
    dims.push_back(ae->input_dim());
    append_mlp(ae->encoder, dims, acts, layers);
    append_mlp(ae->decoder, dims, acts, layers);
    out = {{"kind", "ae"}, {"beta", 0.0}, {"latent_k", ae->latent_dim()},
           {"encoder_layers", ae->encoder.layers.size()}, {"scaling", scaling_json(ae->scaling)}};
  } else {
    const auto& vae = std::get<VaeModel>(network);
    dims.push_back(vae.input_dim());
    append_mlp(vae.trunk, dims, acts, layers);
    dims.push_back(vae.latent_dim());
    acts.push_back(to_string(vae.mu_head.activation));
    layers.push_back(layer_json(vae.mu_head));
    layers.push_back(layer_json(vae.logvar_head));
    append_mlp(vae.decoder, dims, acts, layers);
    out = {{"kind", "vae"}, {"beta", vae.beta}, {"latent_k", vae.latent_dim()},
           {"encoder_layers", vae.trunk.layers.size()}, {"scaling", scaling_json(vae.scaling)}};
  }
  out["dims"] = std::move(dims);
  out["activations"] = std::move(acts);
  out["layers"] = std::move(layers);
  return out;
}

MlpParams mlp_from(const json& dims, const json& acts, const json& layers, std::size_t first_layer,
                   std::size_t first_dim, std::size_t count) {
  MlpParams mlp;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t in = dims.at(first_dim + i).get<std::size_t>();
    const std::size_t out = dims.at(first_dim + i + 1).get<std::size_t>();
    const Activation act = parse_activation(acts.at(first_dim + i).get<std::string>());
    mlp.layers.push_back(layer_from(layers.at(first_layer + i), in, out, act));
  }
  return mlp;
}

Network network_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const json& dims = j.at("dims");
  const json& acts = j.at("activations");
  const json& layers = j.at("layers");
  const std::size_t enc = j.at("encoder_layers").get<std::size_t>();
  if (dims.size() != acts.size() + 1) fail(ErrorKind::shape, "model document: dims needs one more entry than activations");
  const std::size_t transitions = acts.size();
  if (enc == 0 || enc >= transitions) fail(ErrorKind::shape, "model document: encoder_layers out of range");
  const std::size_t dec = transitions - enc;

  if (kind == "ae") {
    if (layers.size() != transitions) fail(ErrorKind::shape, "model document: layer count does not match dims");
    AeModel ae;
    ae.encoder = mlp_from(dims, acts, layers, 0, 0, enc);
    ae.decoder = mlp_from(dims, acts, layers, enc, enc, dec);
    ae.scaling = scaling_from(j.at("scaling"));
    ae.validate();
    return ae;
  }
  if (kind == "vae") {
    // The trunk ends one transition before the latent; heads share that slot.
    if (layers.size() != transitions + 1) fail(ErrorKind::shape, "model document: layer count does not match dims");
    VaeModel vae;
    vae.trunk = mlp_from(dims, acts, layers, 0, 0, enc);
    const std::size_t h = dims.at(enc).get<std::size_t>();
    const std::size_t k = dims.at(enc + 1).get<std::size_t>();
    const Activation head = parse_activation(acts.at(enc).get<std::string>());
    vae.mu_head = layer_from(layers.at(enc), h, k, head);
    vae.logvar_head = layer_from(layers.at(enc + 1), h, k, head);
    vae.decoder = mlp_from(dims, acts, layers, enc + 2, enc + 1, dec - 1);
    vae.beta = j.at("beta").get<double>();
    vae.scaling = scaling_from(j.at("scaling"));
    vae.validate();
    return vae;
  }
  fail(ErrorKind::parse, "model document: unknown kind '" + kind + "'");
}

json metrics_json(const ModelBlock& b, bool include_timing) {
  json noise = json::array();
  for (const auto& n : b.noise) noise.push_back({{"nsr", n.nsr}, {"noise_error", n.noise_error}});
  json out = {{"label", b.label},
              {"mse", b.metrics.mse},
              {"mae", b.metrics.mae},
              {"rmse", b.metrics.rmse},
              {"kl_mean", b.kl_mean},
              {"train_loss", optional_number(b.train_loss)},
              {"test_loss", b.test_loss},
              {"noise", std::move(noise)},
              {"latent_silhouette", optional_number(b.latent_silhouette)},
              {"latent_entropy", optional_number(b.latent_entropy)}};
  if (include_timing) out["inference_seconds"] = b.inference_seconds;
  return out;
}

ModelBlock block_from(const json& j) {
  ModelBlock b;
  b.label = j.at("label").get<std::string>();
  b.metrics = {j.at("mse").get<double>(), j.at("mae").get<double>(), j.at("rmse").get<double>()};
  b.kl_mean = j.at("kl_mean").get<double>();
  b.train_loss = read_optional(j, "train_loss");
  b.test_loss = j.at("test_loss").get<double>();
  for (const auto& n : j.at("noise")) b.noise.push_back({n.at("nsr").get<double>(), n.at("noise_error").get<double>()});
  b.latent_silhouette = read_optional(j, "latent_silhouette");
  b.latent_entropy = read_optional(j, "latent_entropy");
  b.inference_seconds = j.value("inference_seconds", 0.0);
  return b;
}

std::string fmt(double v) { return detail::format_double(v, 9); }

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::string compression_to_json(const CompressionResult& c) { return compression_json(c).dump(2) + "\n"; }

CompressionResult compression_from_json(const std::string& text) {
  return parse_guard("compression document", [&] { return compression_from(json::parse(text)); });
}

std::string matrix_to_csv(const Matrix& m, const std::string& column_prefix) {
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) out += (j ? "," : "") + column_prefix + std::to_string(j);
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + detail::format_double(row[j], 17);
    out += '\n';
  }
  return out;
}

std::string dl_scan_to_csv(const std::vector<DescriptionLength>& scan) {
  std::string out = "k,model_bits,data_bits,total_bits\n";
  for (std::size_t i = 0; i < scan.size(); ++i) {
    out += std::to_string(i + 1) + ',' + detail::format_double(scan[i].model_bits, 17) + ',' +
           detail::format_double(scan[i].data_bits, 17) + ',' + detail::format_double(scan[i].total_bits, 17) + '\n';
  }
  return out;
}

std::string model_to_json(const ReconstructionModel& model) {
  json j = network_json(model.network);
  j["label"] = model.label;
  j["recon_kind"] = to_string(model.recon_kind);
  j["preprocess"] = model.preprocess ? compression_json(*model.preprocess) : json(nullptr);
  return j.dump(2) + "\n";
}

ReconstructionModel model_from_json(const std::string& text) {
  return parse_guard("model document", [&] {
    const json j = json::parse(text);
    ReconstructionModel m{j.value("label", std::string()), network_from(j), std::nullopt,
                          parse_recon_kind(j.value("recon_kind", std::string("mse")))};
    if (j.contains("preprocess") && !j.at("preprocess").is_null()) {
      m.preprocess = compression_from(j.at("preprocess"));
      const std::size_t net_in = std::visit([](const auto& n) { return n.input_dim(); }, m.network);
      if (m.preprocess->rank != net_in) fail(ErrorKind::shape, "model document: preprocess rank must equal network input");
    }
    return m;
  });
}

std::string block_to_json(const ModelBlock& block, bool include_timing) {
  return metrics_json(block, include_timing).dump(2) + "\n";
}

std::string report_to_json(const ComparisonReport& report, bool include_timing) {
  json models = json::array();
  for (const auto& b : report.models) models.push_back(metrics_json(b, include_timing));
  json tests = json::array();
  for (const auto& t : report.tests) {
    json entry = {{"metric", t.metric}, {"status", t.status}};
    if (t.result) {
      entry["t"] = t.result->t;
      entry["df"] = t.result->df;
      entry["p_two_sided"] = t.result->p_two_sided;
      entry["mean_diff"] = t.result->mean_diff;
    } else {
      entry["t"] = entry["df"] = entry["p_two_sided"] = entry["mean_diff"] = nullptr;
    }
    tests.push_back(std::move(entry));
  }
  return json{{"models", std::move(models)}, {"tests", std::move(tests)}}.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
  return parse_guard("comparison document", [&] {
    const json j = json::parse(text);
    const json& models = j.at("models");
    if (!models.is_array() || models.size() != 2) fail(ErrorKind::parse, "comparison document: need exactly two models");
    ComparisonReport r;
    r.models[0] = block_from(models[0]);
    r.models[1] = block_from(models[1]);
    for (const auto& t : j.at("tests")) {
      MetricTest test{t.at("metric").get<std::string>(), std::nullopt, t.at("status").get<std::string>()};
      if (!t.at("t").is_null()) {
        test.result = TTestResult{t.at("t").get<double>(), t.at("df").get<std::size_t>(),
                                  t.at("p_two_sided").get<double>(), t.at("mean_diff").get<double>()};
      }
      r.tests.push_back(std::move(test));
    }
    return r;
  });
}

namespace {

struct Row {
  std::string metric;
  std::string a;
  std::string b;
  const MetricTest* test = nullptr;
};

std::vector<Row> report_rows(const ComparisonReport& r) {
  const auto& a = r.models[0];
  const auto& b = r.models[1];
  auto find_test = [&](const std::string& metric) -> const MetricTest* {
    for (const auto& t : r.tests)
      if (t.metric == metric) return &t;
    return nullptr;
  };
  std::vector<Row> rows = {
      {"mse", fmt(a.metrics.mse), fmt(b.metrics.mse), find_test("mse")},
      {"mae", fmt(a.metrics.mae), fmt(b.metrics.mae), find_test("mae")},
      {"rmse", fmt(a.metrics.rmse), fmt(b.metrics.rmse), find_test("rmse")},
      {"kl_mean", fmt(a.kl_mean), fmt(b.kl_mean)},
      {"train_loss", fmt(a.train_loss), fmt(b.train_loss)},
      {"test_loss", fmt(a.test_loss), fmt(b.test_loss)},
  };
  for (std::size_t i = 0; i < a.noise.size() && i < b.noise.size(); ++i) {
    rows.push_back({"noise_error@" + fmt(a.noise[i].nsr), fmt(a.noise[i].noise_error), fmt(b.noise[i].noise_error)});
  }
  rows.push_back({"latent_silhouette", fmt(a.latent_silhouette), fmt(b.latent_silhouette)});
  rows.push_back({"latent_entropy", fmt(a.latent_entropy), fmt(b.latent_entropy)});
  return rows;
}

}  // namespace

std::string report_to_csv(const ComparisonReport& report) {
  std::string out = "metric," + report.models[0].label + "," + report.models[1].label + ",t,p\n";
  for (const auto& row : report_rows(report)) {
    out += row.metric + ',' + row.a + ',' + row.b + ',';
    if (row.test && row.test->result) out += fmt(row.test->result->t) + ',' + fmt(row.test->result->p_two_sided);
    else out += ',';
    out += '\n';
  }
  return out;
}

std::string render_report(const ComparisonReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %16s %16s %10s %8s\n", "metric", report.models[0].label.c_str(),
                report.models[1].label.c_str(), "t", "p");
  out << line;
  for (const auto& row : report_rows(report)) {
    std::string t = "";
    std::string p = "";
    if (row.test && row.test->result) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", row.test->result->t);
      t = buf;
      p = format_p_value(row.test->result->p_two_sided);
    } else if (row.test) {
      t = row.test->status;
    }
    std::snprintf(line, sizeof line, "%-20s %16s %16s %10s %8s\n", row.metric.c_str(),
                  row.a.empty() ? "-" : row.a.c_str(), row.b.empty() ? "-" : row.b.c_str(), t.c_str(), p.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace mdlvae
