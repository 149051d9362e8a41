#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mrrxbar/calibration.hpp"
#include "mrrxbar/crossbar.hpp"

namespace mrrxbar {

// Nonnegative matrix-vector engine with pass/programming accounting. Signed
// arithmetic lives in the mvm_signed_* wrappers below, which decompose signed
// operands into offset form and count the extra passes they would cost.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual int size() const = 0;

  // weights in [0,1]; identical consecutive non-empty tags skip reprogramming
  void program(const Mat& weights, const std::string& tag = "") {
    if (!tag.empty() && tag == tag_) return;
    if (weights.rows() != size() || weights.cols() != size())
      throw DimensionMismatch("backend: weight matrix must be N x N");
    if (weights.minCoeff() < -1e-12 || weights.maxCoeff() > 1.0 + 1e-12)
      throw OutOfRange("backend: weights must lie in [0,1]");
    do_program(weights.array().max(0.0).min(1.0).matrix());
    tag_ = tag;
    ++programmings_;
  }

  Vec forward(const Vec& x) {
    if (x.size() != size()) throw DimensionMismatch("backend: input length != N");
    ++passes_forward_;
    return do_forward(x);
  }

  Vec backward(const Vec& d) {
    if (d.size() != size()) throw DimensionMismatch("backend: input length != N");
    ++passes_backward_;
    return do_backward(d);
  }

  void count_offset_pass(long n = 1) { passes_offset_ += n; }

  long passes_forward() const { return passes_forward_; }
  long passes_backward() const { return passes_backward_; }
  long passes_offset() const { return passes_offset_; }
  long total_passes() const {
    return passes_forward_ + passes_backward_ + passes_offset_;
  }
  long programmings() const { return programmings_; }
  const std::string& programmed_tag() const { return tag_; }
  void reset_counters() {
    passes_forward_ = passes_backward_ = passes_offset_ = programmings_ = 0;
  }

 protected:
  virtual void do_program(const Mat& weights) = 0;
  virtual Vec do_forward(const Vec& x) = 0;
  virtual Vec do_backward(const Vec& d) = 0;

 private:
  std::string tag_;
  long passes_forward_ = 0;
  long passes_backward_ = 0;
  long passes_offset_ = 0;
  long programmings_ = 0;
};

// Exact digital reference: y = W x, back = W^T d.
class IdealBackend : public Backend {
 public:
  explicit IdealBackend(int n) : n_(n), w_(Mat::Zero(n, n)) {
    if (n < 1) throw ConfigError("IdealBackend: n must be >= 1");
  }
  int size() const override { return n_; }
  const Mat& weights() const { return w_; }

 protected:
  void do_program(const Mat& w) override { w_ = w; }
  Vec do_forward(const Vec& x) override { return w_ * x; }
  Vec do_backward(const Vec& d) override { return w_.transpose() * d; }

 private:
  int n_;
  Mat w_;
};

// Runs every product through the simulated crossbar. Path losses are folded
// into the programmed transmissions (most-lossy cell sets the full-scale
// factor), and a separable row/column correction fitted from probe data at
// construction normalizes backward readouts.
class CrossbarBackend : public Backend {
 public:
  explicit CrossbarBackend(CrossbarConfig cfg, FeedbackParams fb = {},
                           unsigned seed = 1234)
      : cfg_(std::move(cfg)), fb_(fb), rng_(seed) {
    cfg_.validate();
    fb_.validate();
    const int N = cfg_.size_N;
    w_peak_ = weight_bounds(cfg_).second;
    double g_min = 1.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        g_min = std::min(g_min, path_gain_forward(cfg_, i, j));
    scale_ = w_peak_ * g_min;
    phases_ = PhaseMatrix::parked(cfg_);
    fit_backward_correction();
  }

  int size() const override { return cfg_.size_N; }
  const CrossbarConfig& config() const { return cfg_; }
  const CalibrationReport& last_report() const { return report_; }
  const CorrectionParams& correction() const { return corr_; }
  const PhaseMatrix& phases() const { return phases_; }
  double full_scale() const { return scale_; }

 protected:
  void do_program(const Mat& w) override {
    const int N = cfg_.size_N;
    Mat t(N, N);  // cell (i,j) realizes logical weight w(j,i)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        t(i, j) = w(j, i) * scale_ / path_gain_forward(cfg_, i, j);
    report_ = program_weights(cfg_, t, fb_, rng());
    phases_ = report_.phases;
  }

  Vec do_forward(const Vec& x) override {
    const PdReadout r = forward_propagate(
        cfg_, phases_, WdmFrame::comb(x, cfg_.size_N), rng());
    return (r.currents.array() - cfg_.pd_floor_current).matrix() /
           (cfg_.pd_responsivity * scale_);
  }

  // Columns are fed full combs, mirroring the forward convention, so the
  // corrected backward map is the adjoint of the effective forward map
  // including spectral leakage.
  Vec do_backward(const Vec& d) override {
    const Vec fed = d.cwiseQuotient(corr_.col_gain);
    const PdReadout r =
        backward_propagate(cfg_, phases_, WdmFrame::comb(fed, cfg_.size_N), rng());
    Vec out(cfg_.size_N);
    for (int i = 0; i < cfg_.size_N; ++i)
      out(i) = (r.currents(i) - cfg_.pd_floor_current) /
               (cfg_.pd_responsivity * scale_ * corr_.row_gain(i));
    return out;
  }

 private:
  std::mt19937* rng() { return &rng_; }

  // Program a few random matrices, read each cell forward and each column
  // backward, and fit the separable backward/forward gain ratio from the raw
  // PD currents. Probing a single cell or column is leakage-clean, so both
  // readout sets share the same transmissions and the ratio is exactly
  // rank-one in (row, column).
  void fit_backward_correction() {
    const int N = cfg_.size_N;
    std::uniform_real_distribution<double> uni(0.1, 0.9);
    std::vector<Mat> fwd, bwd;
    for (int k = 0; k < 3; ++k) {
      Mat t(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) t(i, j) = uni(rng_) * w_peak_;
      const CalibrationReport rep = program_weights(cfg_, t, fb_, rng());
      Mat f(N, N), b(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const PdReadout r = forward_propagate(
              cfg_, rep.phases, WdmFrame::basis(N, i, j, 1.0), rng());
          f(i, j) = r.currents(j) - cfg_.pd_floor_current;
        }
      for (int j = 0; j < N; ++j) {
        const PdReadout r = backward_propagate(
            cfg_, rep.phases, WdmFrame::basis(N, j, j, 1.0), rng());
        for (int i = 0; i < N; ++i) b(i, j) = r.currents(i) - cfg_.pd_floor_current;
      }
      fwd.push_back(f);
      bwd.push_back(b);
    }
    corr_ = fit_separable_gains(fwd, bwd);
  }

  CrossbarConfig cfg_;
  FeedbackParams fb_;
  std::mt19937 rng_;
  double w_peak_ = 1.0;
  double scale_ = 1.0;
  PhaseMatrix phases_{};
  CalibrationReport report_{};
  CorrectionParams corr_{};
};

namespace detail {

inline Mat offset_form(const Mat& w) {
  if (w.minCoeff() < -1.0 - 1e-9 || w.maxCoeff() > 1.0 + 1e-9)
    throw OutOfRange("signed mvm: weights must lie in [-1,1]");
  return (0.5 * w.array() + 0.5).max(0.0).min(1.0).matrix();
}

}  // namespace detail

// y = W x for W in [-1,1], x >= 0. One optical pass through the offset
// matrix W' = (W+J)/2 plus one offset pass for the all-ones row; the offset
// term equals half the input sum on every output.
inline Vec mvm_signed_weights(Backend& b, const Mat& w, const Vec& x,
                              const std::string& tag = "") {
  b.program(detail::offset_form(w), tag);
  const Vec wx = b.forward(x);
  b.count_offset_pass();
  const double off = 0.5 * x.sum();
  return 2.0 * (wx.array() - off).matrix();
}

// y = W x for W and x both in [-1,1]. Four passes: the offset input x' =
// (x+1)/2 and the constant half-scale input each traverse the array, and two
// offset passes supply the all-ones row terms.
inline Vec mvm_signed_full(Backend& b, const Mat& w, const Vec& x,
                           const std::string& tag = "") {
  if (x.size() != b.size()) throw DimensionMismatch("signed mvm: input length != N");
  if (x.cwiseAbs().maxCoeff() > 1.0 + 1e-9)
    throw OutOfRange("signed mvm: inputs must lie in [-1,1]");
  b.program(detail::offset_form(w), tag);
  const int n = b.size();
  const Vec x_prime = (0.5 * x.array() + 0.5).max(0.0).min(1.0).matrix();
  const Vec half = Vec::Constant(n, 0.5);
  const Vec a = b.forward(x_prime);
  const Vec c = b.forward(half);
  b.count_offset_pass(2);
  const double jx = 0.5 * x_prime.sum();  // (J/2) x'
  const double jo = 0.25 * n;             // (J/2) (1/2)
  return 4.0 * (a.array() - c.array() - jx + jo).matrix();
}

// W^T d for signed d: positive and negative parts traverse the array
// backward separately, with one offset pass each for the all-ones column.
inline Vec mvm_signed_backward(Backend& b, const Mat& w, const Vec& d,
                               const std::string& tag = "") {
  if (d.size() != b.size()) throw DimensionMismatch("signed mvm: input length != N");
  b.program(detail::offset_form(w), tag);
  const Vec d_pos = d.cwiseMax(0.0);
  const Vec d_neg = (-d).cwiseMax(0.0);
  Vec acc = Vec::Zero(b.size());
  double off = 0.0;
  if (d_pos.maxCoeff() > 0.0) {
    acc += b.backward(d_pos);
    b.count_offset_pass();
    off += 0.5 * d_pos.sum();
  }
  if (d_neg.maxCoeff() > 0.0) {
    acc -= b.backward(d_neg);
    b.count_offset_pass();
    off -= 0.5 * d_neg.sum();
  }
  return 2.0 * (acc.array() - off).matrix();
}

}  // namespace mrrxbar
