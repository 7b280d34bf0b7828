#include "gma/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gma {

namespace {

using nlohmann::json;

bool needs_quoting(const std::string& field, char sep) {
  return field.find_first_of(std::string{sep, '"', '\n', '\r'}) !=
         std::string::npos;
}

std::string quote_field(const std::string& field, char sep) {
  if (!needs_quoting(field, sep)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

json scaler_to_json(const Scaler& s) {
  json j;
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  j["stddev"] = std::vector<double>(s.stddev.data(),
                                    s.stddev.data() + s.stddev.size());
  return j;
}

Scaler scaler_from_json(const json& j) {
  Scaler s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  s.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.stddev = Eigen::Map<const Vector>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  return s;
}

json mlp_to_json(const MlpParams& net) {
  json j;
  j["layer_dims"] = net.layer_dims;
  j["activation"] = to_string(net.activation);
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    std::vector<double> w;  // row-major
    w.reserve(static_cast<std::size_t>(net.weights[l].size()));
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
        w.push_back(net.weights[l](r, c));
      }
    }
    weights.push_back(w);
    biases.push_back(std::vector<double>(
        net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

MlpParams mlp_from_json(const json& j) {
  MlpParams net;
  net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  net.activation = activation_from_string(j.at("activation").get<std::string>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const auto w = weights.at(l).get<std::vector<double>>();
    if (static_cast<int>(w.size()) != in * out) {
      throw DataError("model file: weight size mismatch");
    }
    Matrix wm(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) wm(r, c) = w[static_cast<std::size_t>(r) * in + c];
    }
    net.weights.push_back(std::move(wm));
    const auto b = biases.at(l).get<std::vector<double>>();
    if (static_cast<int>(b.size()) != out) {
      throw DataError("model file: bias size mismatch");
    }
    net.biases.push_back(
        Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  return net;
}

}  // namespace

CsvTable read_csv(const std::string& path, char sep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    any_field = true;
  };
  auto end_record = [&]() {
    if (any_field || !record.empty()) {
      records.push_back(record);
    }
    record.clear();
    any_field = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == sep) {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      if (any_field || !field.empty()) {
        end_field();
        end_record();
      }
    } else {
      field += c;
    }
  }
  if (in_quotes) {
    throw DataError("malformed CSV (unterminated quote): " + path);
  }
  if (any_field || !field.empty()) {
    end_field();
    end_record();
  }

  if (records.empty()) {
    throw DataError("empty CSV file: " + path);
  }
  CsvTable table;
  table.header = records.front();
  table.rows.assign(records.begin() + 1, records.end());
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, char sep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file: " + path);
  }
  auto write_record = [&](const std::vector<std::string>& record) {
    for (std::size_t i = 0; i < record.size(); ++i) {
      if (i > 0) out << sep;
      out << quote_field(record[i], sep);
    }
    out << "\n";
  };
  write_record(header);
  for (const auto& row : rows) write_record(row);
  if (!out) {
    throw DataError("write failed: " + path);
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf);
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file for hashing: " + path);
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return fnv1a64_hex(content);
}

Matrix read_matrix_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const Eigen::Index rows = static_cast<Eigen::Index>(table.rows.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(table.header.size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(table.rows[i].size()) != cols) {
      throw DataError("ragged matrix CSV: " + path);
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      try {
        m(i, j) = std::stod(table.rows[i][j]);
      } catch (const std::exception&) {
        throw DataError("non-numeric cell in matrix CSV: " + path);
      }
    }
  }
  return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& column_names) {
  std::vector<std::string> header;
  if (!column_names.empty()) {
    if (static_cast<Eigen::Index>(column_names.size()) != m.cols()) {
      throw DataError("write_matrix_csv: header size mismatch");
    }
    header = column_names;
  } else {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      header.push_back("c" + std::to_string(j));
    }
  }
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(format_double(m(i, j)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::string embedding_sidecar_path(const std::string& path) {
  return path + ".meta.json";
}

void save_embedding(const std::string& path, const AlignedEmbedding& emb) {
  std::vector<std::string> header = {"domain", "row_index"};
  for (int j = 0; j < emb.dim; ++j) {
    header.push_back("e_" + std::to_string(j + 1));
  }
  std::vector<std::vector<std::string>> rows;
  auto emit = [&](const Matrix& e, const char* domain) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      std::vector<std::string> row = {domain, std::to_string(i)};
      for (Eigen::Index j = 0; j < e.cols(); ++j) {
        row.push_back(format_double(e(i, j)));
      }
      rows.push_back(std::move(row));
    }
  };
  emit(emb.ex, "X");
  emit(emb.ey, "Y");
  write_csv(path, header, rows);

  json meta;
  meta["format_version"] = 1;
  meta["method"] = to_string(emb.method);
  meta["dim"] = emb.dim;
  meta["n_x"] = emb.ex.rows();
  meta["n_y"] = emb.ey.rows();
  meta["provenance"] = emb.provenance.empty()
                           ? json::object()
                           : json::parse(emb.provenance);
  meta["content_hash"] = hash_file(path);
  std::ofstream out(embedding_sidecar_path(path));
  out << meta.dump(2) << "\n";
  if (!out) {
    throw DataError("cannot write sidecar for " + path);
  }
}

AlignedEmbedding load_embedding(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 3 || table.header[0] != "domain" ||
      table.header[1] != "row_index") {
    throw DataError("embedding CSV has unexpected header: " + path);
  }
  const int dim = static_cast<int>(table.header.size()) - 2;

  std::vector<std::vector<double>> xs, ys;
  for (const auto& row : table.rows) {
    std::vector<double> coords(dim);
    for (int j = 0; j < dim; ++j) coords[j] = std::stod(row[2 + j]);
    if (row[0] == "X") {
      xs.push_back(std::move(coords));
    } else if (row[0] == "Y") {
      ys.push_back(std::move(coords));
    } else {
      throw DataError("embedding CSV: domain must be X or Y");
    }
  }

  AlignedEmbedding emb;
  emb.dim = dim;
  emb.ex.resize(static_cast<Eigen::Index>(xs.size()), dim);
  emb.ey.resize(static_cast<Eigen::Index>(ys.size()), dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int j = 0; j < dim; ++j) emb.ex(static_cast<Eigen::Index>(i), j) = xs[i][j];
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (int j = 0; j < dim; ++j) emb.ey(static_cast<Eigen::Index>(i), j) = ys[i][j];
  }

  std::ifstream meta_in(embedding_sidecar_path(path));
  if (meta_in) {
    json meta = json::parse(meta_in, nullptr, true, true);
    emb.method = align_method_from_string(meta.at("method").get<std::string>());
    if (meta.contains("provenance")) {
      emb.provenance = meta["provenance"].dump();
    }
  }
  return emb;
}

void save_model(const std::string& path, const TwinModel& model) {
  json j;
  j["format_version"] = 1;
  j["latent_dim"] = model.latent_dim;
  j["lambda"] = model.lambda;
  j["scaler_x"] = scaler_to_json(model.scaler_x);
  j["scaler_y"] = scaler_to_json(model.scaler_y);
  j["encoder_x"] = mlp_to_json(model.encoder_x);
  j["decoder_x"] = mlp_to_json(model.decoder_x);
  j["encoder_y"] = mlp_to_json(model.encoder_y);
  j["decoder_y"] = mlp_to_json(model.decoder_y);
  j["embedding_hash"] = model.embedding_hash;
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write model file: " + path);
  }
  out << j.dump(2) << "\n";
}

TwinModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open model file: " + path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed model file " + path + ": " + e.what());
  }
  TwinModel model;
  model.latent_dim = j.at("latent_dim").get<int>();
  model.lambda = j.at("lambda").get<double>();
  model.scaler_x = scaler_from_json(j.at("scaler_x"));
  model.scaler_y = scaler_from_json(j.at("scaler_y"));
  model.encoder_x = mlp_from_json(j.at("encoder_x"));
  model.decoder_x = mlp_from_json(j.at("decoder_x"));
  model.encoder_y = mlp_from_json(j.at("encoder_y"));
  model.decoder_y = mlp_from_json(j.at("decoder_y"));
  model.embedding_hash = j.value("embedding_hash", "");
  return model;
}

}  // namespace gma
