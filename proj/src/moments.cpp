#include "qmoments/moments.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace qmoments {

Eigen::Index tensor_size(int phase_dim, int order) {
  Eigen::Index n = 1;
  for (int k = 0; k < order; ++k) n *= phase_dim;
  return n;
}

void decode_index(Eigen::Index flat, int phase_dim, int order, std::span<int> digits) {
  for (int s = order - 1; s >= 0; --s) {
    digits[static_cast<std::size_t>(s)] = static_cast<int>(flat % phase_dim);
    flat /= phase_dim;
  }
}

Eigen::Index encode_index(std::span<const int> digits, int phase_dim) {
  Eigen::Index flat = 0;
  for (int d : digits) flat = flat * phase_dim + d;
  return flat;
}

MomentHierarchy::MomentHierarchy(int modes, int max_order) : modes_(modes), max_order_(max_order) {
  if (modes < 1) throw DimensionError("MomentHierarchy: mode count must be >= 1");
  if (max_order < 0 || max_order > defaults::kMaxOrder) {
    throw BudgetError("MomentHierarchy: order " + std::to_string(max_order) + " outside [0, " +
                      std::to_string(defaults::kMaxOrder) + "]");
  }
  for (int k = 0; k <= max_order; ++k) tensors_.push_back(Vector::Zero(tensor_size(2 * modes, k)));
  tensors_[0](0) = 1.0;
}

cplx& MomentHierarchy::operator()(std::span<const int> index) {
  return tensor(static_cast<int>(index.size()))(encode_index(index, phase_dim()));
}

cplx MomentHierarchy::operator()(std::span<const int> index) const {
  return tensor(static_cast<int>(index.size()))(encode_index(index, phase_dim()));
}

Vector MomentHierarchy::first_moments() const {
  if (max_order_ < 1) throw std::invalid_argument("first_moments: hierarchy has no order-1 tensor");
  return tensors_[1];
}

Matrix MomentHierarchy::second_moments() const {
  if (max_order_ < 2) throw std::invalid_argument("second_moments: hierarchy has no order-2 tensor");
  const int d = phase_dim();
  return Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(tensors_[2].data(),
                                                                                                 d, d);
}

Eigen::Index MomentHierarchy::stacked_offset(int order) const {
  Eigen::Index off = 0;
  for (int k = 0; k < order; ++k) off += tensor_size(phase_dim(), k);
  return off;
}

Vector MomentHierarchy::stacked() const {
  Vector out(stacked_size());
  for (int k = 0; k <= max_order_; ++k) out.segment(stacked_offset(k), tensors_[k].size()) = tensors_[k];
  return out;
}

MomentHierarchy MomentHierarchy::from_stacked(int modes, int max_order, const Vector& stacked) {
  MomentHierarchy h(modes, max_order);
  if (stacked.size() != h.stacked_size()) throw DimensionError("from_stacked: size mismatch");
  for (int k = 0; k <= max_order; ++k) h.tensors_[k] = stacked.segment(h.stacked_offset(k), h.tensors_[k].size());
  return h;
}

MomentHierarchy MomentHierarchy::truncated(int max_order) const {
  if (max_order > max_order_) throw std::invalid_argument("truncated: cannot raise the order");
  MomentHierarchy h(modes_, max_order);
  for (int k = 0; k <= max_order; ++k) h.tensors_[k] = tensors_[k];
  return h;
}

Vector apply_to_slot(const Matrix& m, const Vector& tensor, int order, int slot) {
  const int d = static_cast<int>(m.rows());
  if (m.cols() != d || tensor.size() != tensor_size(d, order) || slot < 0 || slot >= order) {
    throw DimensionError("apply_to_slot: shape mismatch");
  }
  const Eigen::Index inner = tensor_size(d, order - 1 - slot);
  const Eigen::Index outer = tensor_size(d, slot);
  const Eigen::Index block = inner * d;
  Vector out(tensor.size());
  const Matrix mt = m.transpose();
  for (Eigen::Index o = 0; o < outer; ++o) {
    // Column-major view (inner x d): entry (in, b) sits at b * inner + in.
    Eigen::Map<const Matrix> x(tensor.data() + o * block, inner, d);
    Eigen::Map<Matrix>(out.data() + o * block, inner, d).noalias() = x * mt;
  }
  return out;
}

MomentHierarchy apply_slotwise(const Matrix& m, const MomentHierarchy& h) {
  if (m.rows() != h.phase_dim() || m.cols() != h.phase_dim()) throw DimensionError("apply_slotwise: shape mismatch");
  MomentHierarchy out = h;
  for (int k = 1; k <= h.max_order(); ++k) {
    for (int s = 0; s < k; ++s) out.tensor(k) = apply_to_slot(m, out.tensor(k), k, s);
  }
  return out;
}

MomentHierarchy heisenberg_rhs(const MomentHierarchy& h, const DriftData& drift) {
  const int d = h.phase_dim();
  if (drift.B.rows() != d || drift.B.cols() != d || drift.phi.size() != d || drift.Xi.rows() != d ||
      drift.Xi.cols() != d) {
    throw DimensionError("heisenberg_rhs: drift dimension does not match the hierarchy");
  }
  MomentHierarchy out(h.modes(), h.max_order());
  out.tensor(0).setZero();
  std::array<int, defaults::kMaxOrder> digits{};
  std::array<int, defaults::kMaxOrder> rest{};
  for (int k = 1; k <= h.max_order(); ++k) {
    Vector& dt = out.tensor(k);
    for (int s = 0; s < k; ++s) dt += apply_to_slot(drift.B, h.tensor(k), k, s);
    const Vector& lower1 = h.tensor(k - 1);
    for (Eigen::Index flat = 0; flat < dt.size(); ++flat) {
      decode_index(flat, d, k, digits);
      cplx acc = 0.0;
      for (int s = 0; s < k; ++s) {
        int r = 0;
        for (int q = 0; q < k; ++q) {
          if (q != s) rest[r++] = digits[q];
        }
        acc += drift.phi(digits[s]) * lower1(encode_index(std::span<const int>(rest.data(), r), d));
      }
      if (k >= 2) {
        const Vector& lower2 = h.tensor(k - 2);
        for (int s = 0; s < k; ++s) {
          for (int u = s + 1; u < k; ++u) {
            int r = 0;
            for (int q = 0; q < k; ++q) {
              if (q != s && q != u) rest[r++] = digits[q];
            }
            acc += drift.Xi(digits[s], digits[u]) * lower2(encode_index(std::span<const int>(rest.data(), r), d));
          }
        }
      }
      dt(flat) += acc;
    }
  }
  return out;
}

std::vector<Vector> drive_noise_tensors(const Vector& psi, const Matrix& beta, int max_order) {
  const int d = static_cast<int>(psi.size());
  if (beta.rows() != d || beta.cols() != d) throw DimensionError("drive_noise_tensors: shape mismatch");
  std::vector<Vector> w;
  std::array<int, defaults::kMaxOrder> digits{};
  for (int j = 0; j <= max_order; ++j) {
    Vector wj = Vector::Zero(tensor_size(d, j));
    for (const auto& term : enumerate_partitions(j)) {
      if (!term.initial.empty()) continue;
      for (Eigen::Index flat = 0; flat < wj.size(); ++flat) {
        decode_index(flat, d, j, digits);
        cplx v = 1.0;
        for (int s : term.drive) v *= psi(digits[s]);
        for (const auto& [a, b] : term.pairs) v *= beta(digits[a], digits[b]);
        wj(flat) += v;
      }
    }
    w.push_back(std::move(wj));
  }
  return w;
}

MomentHierarchy partition_sum(const MomentHierarchy& initial, const Vector& psi, const Matrix& beta,
                              bool exclude_full_initial) {
  const int d = initial.phase_dim();
  if (psi.size() != d || beta.rows() != d || beta.cols() != d) throw DimensionError("partition_sum: shape mismatch");
  const int m = initial.max_order();
  // Grouping the terms by their initial-slot set I3 = S leaves, for each S, the
  // sum over drive/pairing splittings of the complement: W_{k-|S|}.
  const auto w = drive_noise_tensors(psi, beta, m);
  MomentHierarchy out(initial.modes(), m);
  std::array<int, defaults::kMaxOrder> digits{}, in_s{}, in_c{};
  for (int k = 0; k <= m; ++k) {
    Vector& xk = out.tensor(k);
    xk.setZero();
    const unsigned full = (1u << k) - 1u;
    for (Eigen::Index flat = 0; flat < xk.size(); ++flat) {
      decode_index(flat, d, k, digits);
      cplx acc = 0.0;
      for (unsigned mask = 0; mask <= full; ++mask) {
        if (exclude_full_initial && mask == full) continue;
        int ns = 0, nc = 0;
        for (int s = 0; s < k; ++s) {
          if (mask & (1u << s)) in_s[ns++] = digits[s];
          else in_c[nc++] = digits[s];
        }
        const cplx wv = w[nc](encode_index(std::span<const int>(in_c.data(), nc), d));
        if (wv == 0.0) continue;
        acc += initial.tensor(ns)(encode_index(std::span<const int>(in_s.data(), ns), d)) * wv;
      }
      xk(flat) = acc;
    }
  }
  return out;
}

MomentHierarchy evolve_hierarchy(const MomentHierarchy& initial, const PropagatorBundle& bundle, double t) {
  if (bundle.phase_dim() != initial.phase_dim()) {
    throw DimensionError("evolve_hierarchy: bundle and hierarchy disagree on the phase dimension");
  }
  const std::size_t k = bundle.index_of(t);
  return apply_slotwise(bundle.G(k), partition_sum(initial, bundle.psi(k), bundle.beta(k)));
}

Matrix central_second_moment(const MomentHierarchy& h) {
  if (h.max_order() < 2) throw std::invalid_argument("central_second_moment: hierarchy order must be >= 2");
  const Vector mu = h.first_moments();
  return h.second_moments() - mu * mu.transpose();
}

double max_abs_difference(const MomentHierarchy& a, const MomentHierarchy& b) {
  if (a.modes() != b.modes() || a.max_order() != b.max_order()) {
    throw DimensionError("max_abs_difference: hierarchies differ in shape");
  }
  double m = 0.0;
  for (int k = 0; k <= a.max_order(); ++k) {
    if (a.tensor(k).size()) m = std::max(m, (a.tensor(k) - b.tensor(k)).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace qmoments
