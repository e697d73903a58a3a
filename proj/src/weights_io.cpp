#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "klon/error.hpp"
#include "klon/rnn.hpp"

namespace klon::rnn {
namespace {

using nlohmann::json;

std::string where(std::size_t model, const std::string& name) {
  return "model[" + std::to_string(model) + "]." + name;
}

double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw WeightsError(name + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw NonFiniteError(name + ": non-finite value");
  return v;
}

const json& field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) throw WeightsError(ctx + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw WeightsError(ctx + ": missing field '" + key + "'");
  return *it;
}

// Reads a rows x cols matrix (row-major, nested arrays) into `out`.
void matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& name,
            const std::string& ctx, double* out) {
  const auto shape_error = [&](const std::string& got) {
    return DimensionError(name, ctx + " expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " + got);
  };
  if (!j.is_array()) throw shape_error("a non-array");
  if (j.size() != rows) throw shape_error(std::to_string(j.size()) + " rows");
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array()) throw shape_error("a non-array row");
    if (row.size() != cols) throw shape_error(std::to_string(rows) + "x" + std::to_string(row.size()));
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = number(row[c], ctx);
  }
}

void vector(const json& j, std::size_t n, const std::string& name, const std::string& ctx, double* out) {
  if (!j.is_array() || j.size() != n) {
    throw DimensionError(name, ctx + " expected " + std::to_string(n) + " values, got " +
                                   (j.is_array() ? std::to_string(j.size()) : std::string("a non-array")));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (j[i].is_array()) throw DimensionError(name, ctx + " expected a flat vector");
    out[i] = number(j[i], ctx);
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw WeightsError(std::string("weight file is not valid JSON: ") + e.what());
  } catch (const json::out_of_range& e) {
    // 406: a literal such as 1e400 that does not fit in a double.
    if (e.id == 406) throw NonFiniteError(std::string("weight file has a non-finite number: ") + e.what());
    throw WeightsError(e.what());
  }
}

// Orders entries by the gain grid; every grid value exactly once.
std::array<const json*, kBankSize> order_by_gain(const json& root) {
  if (!root.is_array()) throw WeightsError("weight file must be a top-level array of models");
  std::array<const json*, kBankSize> slots{};
  for (std::size_t m = 0; m < root.size(); ++m) {
    const json& entry = root[m];
    if (!entry.is_object() || !entry.contains("gain")) throw BankIncompleteError(where(m, "gain") + " is missing");
    const double g = number(entry["gain"], where(m, "gain"));
    const auto it = std::find(kGainGrid.begin(), kGainGrid.end(), g);
    if (it == kGainGrid.end()) throw BankIncompleteError(where(m, "gain") + " = " + std::to_string(g) + " is not on the grid 0, 0.25, 0.5, 0.75, 1");
    const auto slot = static_cast<std::size_t>(it - kGainGrid.begin());
    if (slots[slot] != nullptr) throw BankIncompleteError("gain " + std::to_string(g) + " appears twice");
    slots[slot] = &entry;
  }
  for (std::size_t k = 0; k < kBankSize; ++k) {
    if (slots[k] == nullptr) {
      throw BankIncompleteError("bank has " + std::to_string(root.size()) + " models; missing gain " + std::to_string(kGainGrid[k]));
    }
  }
  return slots;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightsError("cannot read weight file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json column(const Vec& v) {
  json j = json::array();
  for (double x : v) j.push_back(json::array({x}));
  return j;
}

json rows(const Mat& m) {
  json j = json::array();
  for (const Vec& r : m) j.push_back(r);
  return j;
}

}  // namespace

ModelBank parse_model_bank(const std::string& json_text) {
  const json root = parse_json(json_text);
  const auto slots = order_by_gain(root);
  std::array<GruModel, kBankSize> models;
  for (std::size_t k = 0; k < kBankSize; ++k) {
    const json& e = *slots[k];
    const std::string ctx = where(k, "");
    const json& gru = field(e, "gru", ctx);
    const json& dense = field(e, "dense", ctx);
    GruWeights g;
    DenseWeights d;
    matrix(field(gru, "Wz", ctx), kUnits, 1, "Wz", ctx, g.Wz.data());
    matrix(field(gru, "Wr", ctx), kUnits, 1, "Wr", ctx, g.Wr.data());
    matrix(field(gru, "Wc", ctx), kUnits, 1, "Wc", ctx, g.Wc.data());
    matrix(field(gru, "Uz", ctx), kUnits, kUnits, "Uz", ctx, g.Uz[0].data());
    matrix(field(gru, "Ur", ctx), kUnits, kUnits, "Ur", ctx, g.Ur[0].data());
    matrix(field(gru, "Uc", ctx), kUnits, kUnits, "Uc", ctx, g.Uc[0].data());
    vector(field(gru, "bz", ctx), kUnits, "bz", ctx, g.bz.data());
    vector(field(gru, "br", ctx), kUnits, "br", ctx, g.br.data());
    vector(field(gru, "bc", ctx), kUnits, "bc", ctx, g.bc.data());
    const json& w = field(dense, "W", ctx);
    if (w.is_array() && !w.empty() && w[0].is_array()) {
      matrix(w, 1, kUnits, "W", ctx, d.W.data());
    } else {
      vector(w, kUnits, "W", ctx, d.W.data());
    }
    d.b = number(field(dense, "b", ctx), ctx + "b");
    models[k] = GruModel(g, d);
  }
  return ModelBank(models);
}

ModelBank load_model_bank(const std::string& path) { return parse_model_bank(read_file(path)); }

std::string model_bank_to_json(const ModelBank& bank) {
  json root = json::array();
  for (std::size_t k = 0; k < kBankSize; ++k) {
    const auto& g = bank.model(k).gru();
    const auto& d = bank.model(k).dense();
    root.push_back({{"gain", kGainGrid[k]},
                    {"gru",
                     {{"Wz", column(g.Wz)}, {"Wr", column(g.Wr)}, {"Wc", column(g.Wc)},
                      {"Uz", rows(g.Uz)}, {"Ur", rows(g.Ur)}, {"Uc", rows(g.Uc)},
                      {"bz", g.bz}, {"br", g.br}, {"bc", g.bc}}},
                    {"dense", {{"W", d.W}, {"b", d.b}}}});
  }
  // nlohmann prints doubles with 17 significant digits, so this round-trips.
  return root.dump(1) + "\n";
}

void save_model_bank(const ModelBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightsError("cannot write weight file '" + path + "'");
  out << model_bank_to_json(bank);
}

ModelBank parse_keras_bank(const std::string& json_text) {
  constexpr std::size_t n = kUnits;
  const json root = parse_json(json_text);
  const auto slots = order_by_gain(root);
  std::array<GruModel, kBankSize> models;
  for (std::size_t k = 0; k < kBankSize; ++k) {
    const json& e = *slots[k];
    const std::string ctx = where(k, "");
    double kernel[3 * n], recurrent[n * 3 * n], bias[2 * 3 * n], dense_kernel[n], dense_bias[1];
    matrix(field(e, "kernel", ctx), 1, 3 * n, "kernel", ctx, kernel);
    matrix(field(e, "recurrent_kernel", ctx), n, 3 * n, "recurrent_kernel", ctx, recurrent);
    matrix(field(e, "bias", ctx), 2, 3 * n, "bias", ctx, bias);
    matrix(field(e, "dense_kernel", ctx), n, 1, "dense_kernel", ctx, dense_kernel);
    vector(field(e, "dense_bias", ctx), 1, "dense_bias", ctx, dense_bias);

    GruWeights g;
    DenseWeights d;
    for (std::size_t i = 0; i < n; ++i) {
      g.Wz[i] = kernel[i];
      g.Wr[i] = kernel[n + i];
      g.Wc[i] = kernel[2 * n + i];
      // Keras multiplies h (row) by the kernel, so column i feeds unit i.
      for (std::size_t j = 0; j < n; ++j) {
        g.Uz[i][j] = recurrent[j * 3 * n + i];
        g.Ur[i][j] = recurrent[j * 3 * n + n + i];
        g.Uc[i][j] = recurrent[j * 3 * n + 2 * n + i];
      }
      g.bz[i] = bias[i] + bias[3 * n + i];
      g.br[i] = bias[n + i] + bias[3 * n + n + i];
      g.bc[i] = bias[2 * n + i];
      if (bias[3 * n + 2 * n + i] != 0.0) {
        throw WeightsError(ctx + "bias: nonzero recurrent bias on the candidate gate is not supported");
      }
      d.W[i] = dense_kernel[i];
    }
    d.b = dense_bias[0];
    models[k] = GruModel(g, d);
  }
  return ModelBank(models);
}

ModelBank load_weights_auto(const std::string& path) {
  const std::string text = read_file(path);
  const json root = parse_json(text);
  if (root.is_array() && !root.empty() && root[0].is_object() && root[0].contains("kernel")) {
    return parse_keras_bank(text);
  }
  return parse_model_bank(text);
}

}  // namespace klon::rnn
