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

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "dyga/rng.hpp"
#include "dyga/subspace_gaussian.hpp"

namespace dyga::testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, SeededRng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_spd(int d, SeededRng& rng, double ridge = 0.5) {
  Eigen::MatrixXd a = gaussian_matrix(d, d, rng);
  Eigen::MatrixXd s = a * a.transpose() / d;
  s.diagonal().array() += ridge;
  return 0.5 * (s + s.transpose());
}

// Log density straight from a dense covariance, via Cholesky.
inline double dense_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

// Full-covariance component built from an eigendecomposition of sigma.
inline SubspaceGaussian full_component(const Eigen::VectorXd& mean, const Eigen::MatrixXd& sigma,
                                       double weight) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const int d = static_cast<int>(mean.size());
  SubspaceGaussian g;
  g.weight = weight;
  g.mean = mean;
  g.basis = es.eigenvectors().rowwise().reverse();
  g.retained_eigvals = es.eigenvalues().reverse();
  g.tied_noise = g.retained_eigvals(d - 1);
  g.covariance = sigma;
  return g;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    SeededRng rng(std::hash<std::string>{}(tag), static_cast<std::uint64_t>(::getpid()));
    path_ = std::filesystem::temp_directory_path() /
            ("dyga_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace dyga::testing
