#pragma once

#include "gma/twinae.hpp"
#include "gma/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gma {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 reader: quoted fields, escaped quotes, embedded separators and
// newlines. The first record is the mandatory header.
CsvTable read_csv(const std::string& path, char sep = ',');
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               char sep = ',');

// Round-trip-exact decimal rendering of a double.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);
std::string hash_file(const std::string& path);

Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& column_names = {});

// AlignedEmbedding on disk: CSV (domain,row_index,e_1..e_m) plus a JSON
// sidecar at `<path>.meta.json` carrying method + config + provenance.
void save_embedding(const std::string& path, const AlignedEmbedding& emb);
AlignedEmbedding load_embedding(const std::string& path);
std::string embedding_sidecar_path(const std::string& path);

// TwinModel as versioned JSON: layer dims, row-major parameters, scalers,
// lambda and the provenance hash of the embedding it was trained against.
void save_model(const std::string& path, const TwinModel& model);
TwinModel load_model(const std::string& path);

}  // namespace gma
