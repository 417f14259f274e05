// Copyright 2026 The dyga Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dyga/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dyga/error.hpp"

namespace dyga {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'Y', 'G', 'A'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(in[at + b]) << (8 * b);
  return v;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) fail(ErrorKind::kIoError, "write failed for " + path.string());
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::uint64_t Tensor::numel() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.values.size() != t.numel()) {
    fail(ErrorKind::kShapeError, "tensor payload does not match its dims");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(12 + 8 * t.dims.size() + 4 * t.values.size());
  put_u32(out, kTensorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u64(out, d);
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorKind::kFormatError, "not a DYGA tensor (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kTensorFormatVersion) {
    fail(ErrorKind::kFormatError, "unsupported tensor format version " + std::to_string(version));
  }
  const auto rank = static_cast<std::size_t>(get_le(bytes, 8, 4));
  const std::size_t header = 12 + 8 * rank;
  if (bytes.size() < header) fail(ErrorKind::kFormatError, "truncated tensor header");
  Tensor t;
  std::uint64_t count = 1;
  for (std::size_t r = 0; r < rank; ++r) {
    t.dims.push_back(get_le(bytes, 12 + 8 * r, 8));
    if (t.dims.back() != 0 && count > (std::uint64_t{1} << 40) / t.dims.back()) {
      fail(ErrorKind::kFormatError, "tensor dims overflow");
    }
    count *= t.dims.back();
  }
  if (bytes.size() - header != 4 * count) {
    fail(ErrorKind::kFormatError, "payload is " + std::to_string(bytes.size() - header) +
                                      " bytes, expected " + std::to_string(4 * count));
  }
  t.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    t.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, header + 4 * i, 4)));
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  write_bytes(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_bytes(path)); }

Tensor to_tensor(const FeatureTensor& features) {
  Tensor t;
  const auto units = features.size();
  const auto n = units ? static_cast<std::uint64_t>(features[0].rows()) : 0;
  const auto dim = units ? static_cast<std::uint64_t>(features[0].cols()) : 0;
  t.dims = {n, units, dim};
  t.values.resize(n * units * dim);
  for (std::size_t u = 0; u < units; ++u) {
    if (static_cast<std::uint64_t>(features[u].rows()) != n ||
        static_cast<std::uint64_t>(features[u].cols()) != dim) {
      fail(ErrorKind::kShapeError, "units differ in shape");
    }
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        t.values[(i * units + u) * dim + j] = static_cast<float>(
            features[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  }
  return t;
}

FeatureTensor from_tensor(const Tensor& t) {
  if (t.dims.size() != 3) {
    fail(ErrorKind::kFormatError, "feature tensor must have rank 3 (N x U x D), got rank " +
                                      std::to_string(t.dims.size()));
  }
  const auto n = t.dims[0];
  const auto units = t.dims[1];
  const auto dim = t.dims[2];
  FeatureTensor out(units, Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim)));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t u = 0; u < units; ++u) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        out[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            t.values[(i * units + u) * dim + j];
      }
    }
  }
  return out;
}

void write_factors_csv(const std::filesystem::path& path, const FactorTable& factors) {
  std::ostringstream out;
  out << "sample_id";
  for (int f = 0; f < factors.factors(); ++f) out << ",f" << f;
  out << '\n';
  for (Eigen::Index i = 0; i < factors.samples(); ++i) {
    out << i;
    for (int f = 0; f < factors.factors(); ++f) out << ',' << factors.codes(i, f);
    out << '\n';
  }
  write_text(path, out.str());
}

FactorTable read_factors_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_id", 0) != 0) {
    fail(ErrorKind::kFormatError, path.string() + ": header must start with sample_id");
  }
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (columns == 0) fail(ErrorKind::kFormatError, path.string() + ": no factor columns");

  std::vector<std::vector<int>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream cells(line);
    std::string cell;
    bool first = true;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      long long value = 0;
      try {
        value = std::stoll(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) {
        fail(ErrorKind::kFormatError, path.string() + ":" + std::to_string(line_no) +
                                          ": non-integer cell '" + cell + "'");
      }
      if (!first) {
        if (value < 0 || value > 1'000'000) {
          fail(ErrorKind::kFormatError, path.string() + ":" + std::to_string(line_no) +
                                            ": factor code out of range");
        }
        row.push_back(static_cast<int>(value));
      }
      first = false;
    }
    if (row.size() != columns) {
      fail(ErrorKind::kFormatError, path.string() + ":" + std::to_string(line_no) +
                                        ": expected " + std::to_string(columns) + " factor codes");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXi codes(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < columns; ++f) {
      codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = rows[i][f];
    }
  }
  return FactorTable::from_codes(std::move(codes));
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, text.data(), text.size());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, dump_json(j)); }

json read_json(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
  }
}

json to_json(const SubspaceGaussian& g) {
  json basis = json::array();
  for (Eigen::Index r = 0; r < g.basis.rows(); ++r) {
    basis.push_back(vector_json(g.basis.row(r).transpose()));
  }
  return {{"weight", g.weight},
          {"mean", vector_json(g.mean)},
          {"intrinsic_dim", g.intrinsic_dim()},
          {"basis", basis},
          {"retained_eigvals", vector_json(g.retained_eigvals)},
          {"tied_noise", g.tied_noise}};
}

SubspaceGaussian gaussian_from_json(const json& j) {
  try {
    SubspaceGaussian g;
    g.weight = j.at("weight").get<double>();
    g.mean = vector_from(j.at("mean"));
    g.retained_eigvals = vector_from(j.at("retained_eigvals"));
    g.tied_noise = j.at("tied_noise").get<double>();
    const auto& basis = j.at("basis");
    const auto dim = g.mean.size();
    const auto kept = g.retained_eigvals.size();
    if (static_cast<Eigen::Index>(basis.size()) != dim ||
        j.at("intrinsic_dim").get<Eigen::Index>() != kept) {
      fail(ErrorKind::kFormatError, "component basis does not match its mean/eigenvalues");
    }
    g.basis.resize(dim, kept);
    for (Eigen::Index r = 0; r < dim; ++r) {
      const Eigen::VectorXd row = vector_from(basis[static_cast<std::size_t>(r)]);
      if (row.size() != kept) fail(ErrorKind::kFormatError, "ragged component basis");
      g.basis.row(r) = row.transpose();
    }
    return g;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormatError, std::string("bad component: ") + e.what());
  }
}

json to_json(const AnchorModel& m) {
  json comps = json::array();
  for (const auto& c : m.mixture.components) comps.push_back(to_json(c));
  return {{"unit_index", m.unit_index},
          {"created_at_round", m.created_at_round},
          {"membership_threshold", m.membership_threshold},
          {"density_threshold", m.density_threshold},
          {"log_likelihood", m.mixture.log_likelihood},
          {"n_iters", m.mixture.n_iters},
          {"components", comps}};
}

AnchorModel anchor_model_from_json(const json& j) {
  try {
    AnchorModel m;
    m.unit_index = j.at("unit_index").get<int>();
    m.created_at_round = j.at("created_at_round").get<int>();
    m.membership_threshold = j.at("membership_threshold").get<double>();
    m.density_threshold = j.at("density_threshold").get<double>();
    m.mixture.log_likelihood = j.at("log_likelihood").get<double>();
    m.mixture.n_iters = j.at("n_iters").get<int>();
    for (const auto& c : j.at("components")) m.mixture.components.push_back(gaussian_from_json(c));
    if (m.mixture.components.empty()) fail(ErrorKind::kFormatError, "model has no components");
    for (const auto& c : m.mixture.components) {
      if (c.dim() != m.mixture.components.front().dim()) {
        fail(ErrorKind::kFormatError, "components differ in dimension");
      }
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormatError, std::string("bad anchor model: ") + e.what());
  }
}

json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json out = {{"factorvae", r.factorvae},
              {"dci_gbt", opt(r.dci_gbt)},
              {"dci_mi", opt(r.dci_mi)},
              {"dci", r.dci()},
              {"mig", r.mig},
              {"sap", r.sap},
              {"modularity", r.modularity},
              {"downstream", nullptr},
              {"metric_seed", r.seed}};
  if (r.downstream) {
    out["downstream"] = {{"acc", r.downstream->acc},
                         {"acc_1000", r.downstream->acc_1000},
                         {"acc_100", r.downstream->acc_100},
                         {"ratio_1000", r.downstream->ratio_1000},
                         {"ratio_100", r.downstream->ratio_100}};
  }
  return out;
}

}  // namespace dyga
