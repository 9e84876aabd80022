#include "gazekit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "gazekit/error.hpp"

namespace gazekit {

namespace {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

struct Tensor::Impl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // non-empty iff requires_grad
  bool requires_grad = false;
  const Tape* producer = nullptr;

  Impl(Shape s, std::vector<double> d, bool rg)
      : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    if (numel(shape) != data.size())
      throw DataError("tensor: shape " + shape_str(shape) + " does not match " +
                      std::to_string(data.size()) + " values");
    for (std::size_t dim : shape)
      if (dim == 0) throw DataError("tensor: zero extent in shape " + shape_str(shape));
    if (requires_grad) grad.assign(data.size(), 0.0);
  }
};

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = numel(shape);
  return Tensor(std::make_shared<Impl>(std::move(shape), std::vector<double>(n, 0.0),
                                       requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = numel(shape);
  return Tensor(std::make_shared<Impl>(std::move(shape),
                                       std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  return Tensor(std::make_shared<Impl>(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value) { return full({1}, value, false); }

Tensor Tensor::xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng,
                              bool requires_grad) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> d(fan_in * fan_out);
  for (double& v : d) v = rng.uniform(-limit, limit);
  return from_data({fan_in, fan_out}, std::move(d), requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->data.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DataError("tensor: rows() on shape " + shape_str(shape()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DataError("tensor: cols() on shape " + shape_str(shape()));
  return impl_->shape[1];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

std::span<double> Tensor::data() { return impl_->data; }
std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::grad() {
  if (!requires_grad())
    throw DataError("tensor: grad() on a tensor without requires_grad");
  return impl_->grad;
}

std::span<const double> Tensor::grad() const {
  if (!requires_grad())
    throw DataError("tensor: grad() on a tensor without requires_grad");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (requires_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::value() const {
  if (size() != 1)
    throw DataError("tensor: value() on non-scalar shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2 || r >= impl_->shape[0] || c >= impl_->shape[1])
    throw DataError("tensor: at(" + std::to_string(r) + "," + std::to_string(c) +
                    ") out of range for " + shape_str(shape()));
  return impl_->data[r * impl_->shape[1] + c];
}

Tensor Tensor::clone() const {
  Tensor t(std::make_shared<Impl>(impl_->shape, impl_->data, impl_->requires_grad));
  return t;
}

bool Tensor::all_finite() const {
  for (double v : impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

namespace {

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw DataError(std::string(op) + ": undefined tensor operand");
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DataError(std::string(op) + ": expected rank-2 tensor, got " +
                    shape_str(t.shape()));
}

void ensure_finite(const Tensor& t, const char* op) {
  if (!t.all_finite())
    throw NumericError(std::string(op) + ": non-finite value in output");
}

// Last-axis view: rows x width, width = trailing extent.
std::pair<std::size_t, std::size_t> last_axis(const Tensor& t) {
  std::size_t width = t.shape().back();
  return {t.size() / width, width};
}

}  // namespace

bool Tape::track(const Tensor& t) const { return recording_ && t.requires_grad(); }

Tensor Tape::make_output(Shape shape, bool requires_grad, const char*) {
  Tensor out = Tensor::zeros(std::move(shape), recording_ && requires_grad);
  out.impl_->producer = this;
  return out;
}

void Tape::record(std::function<void()> backprop) {
  if (consumed_)
    throw DataError("tape: recording onto a consumed tape; use a fresh tape per step");
  nodes_.push_back(std::move(backprop));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows())
    throw DataError("matmul: inner dimensions differ: " + shape_str(a.shape()) +
                    " vs " + shape_str(b.shape()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output({m, n}, track(a) || track(b), "matmul");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* br = pb + l * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
    }
  ensure_finite(out, "matmul");
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi, m, k, n] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* da = ai->grad.data();
        const double* pb = bi->data.data();
        // dA += G * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gv = g[i * n + j];
            const double* brow = pb + j;  // column j of B, stride n
            for (std::size_t l = 0; l < k; ++l) da[i * k + l] += gv * brow[l * n];
          }
      }
      if (bi->requires_grad) {
        double* db = bi->grad.data();
        const double* pa = ai->data.data();
        // dB += A^T * G
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            const double av = pa[i * k + l];
            const double* grow = g + i * n;
            for (std::size_t j = 0; j < n; ++j) db[l * n + j] += av * grow[j];
          }
      }
    });
  }
  return out;
}

Tensor Tape::transpose(const Tensor& x) {
  require_defined(x, "transpose");
  require_rank2(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out = make_output({c, r}, track(x), "transpose");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data()[j * r + i] = x.data()[i * c + j];
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, r, c] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          xi->grad[i * c + j] += oi->grad[j * r + i];
    });
  }
  return out;
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  if (numel(shape) != x.size())
    throw DataError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                    " changes element count");
  Tensor out = make_output(std::move(shape), track(x), "reshape");
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::concat_rows(const Tensor& a, const Tensor& b) {
  require_defined(a, "concat_rows");
  require_defined(b, "concat_rows");
  require_rank2(a, "concat_rows");
  require_rank2(b, "concat_rows");
  if (a.cols() != b.cols())
    throw DataError("concat_rows: column counts differ: " + shape_str(a.shape()) +
                    " vs " + shape_str(b.shape()));
  const std::size_t ra = a.rows(), rb = b.rows(), c = a.cols();
  Tensor out = make_output({ra + rb, c}, track(a) || track(b), "concat_rows");
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + ra * c);
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi, ra, rb, c] {
      if (ai->requires_grad)
        for (std::size_t i = 0; i < ra * c; ++i) ai->grad[i] += oi->grad[i];
      if (bi->requires_grad)
        for (std::size_t i = 0; i < rb * c; ++i) bi->grad[i] += oi->grad[ra * c + i];
    });
  }
  return out;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  require_defined(a, "concat_cols");
  require_defined(b, "concat_cols");
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (a.rows() != b.rows())
    throw DataError("concat_cols: row counts differ: " + shape_str(a.shape()) +
                    " vs " + shape_str(b.shape()));
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = make_output({r, ca + cb}, track(a) || track(b), "concat_cols");
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(a.data().begin() + i * ca, ca, out.data().begin() + i * (ca + cb));
    std::copy_n(b.data().begin() + i * cb, cb,
                out.data().begin() + i * (ca + cb) + ca);
  }
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi, r, ca, cb] {
      for (std::size_t i = 0; i < r; ++i) {
        if (ai->requires_grad)
          for (std::size_t j = 0; j < ca; ++j)
            ai->grad[i * ca + j] += oi->grad[i * (ca + cb) + j];
        if (bi->requires_grad)
          for (std::size_t j = 0; j < cb; ++j)
            bi->grad[i * cb + j] += oi->grad[i * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

Tensor Tape::slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_defined(x, "slice_cols");
  require_rank2(x, "slice_cols");
  if (count == 0 || begin + count > x.cols())
    throw DataError("slice_cols: range [" + std::to_string(begin) + "," +
                    std::to_string(begin + count) + ") outside " +
                    shape_str(x.shape()));
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out = make_output({r, count}, track(x), "slice_cols");
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(x.data().begin() + i * c + begin, count,
                out.data().begin() + i * count);
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, r, c, begin, count] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j)
          xi->grad[i * c + begin + j] += oi->grad[i * count + j];
    });
  }
  return out;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DataError(std::string(op) + ": shapes differ: " + shape_str(a.shape()) +
                    " vs " + shape_str(b.shape()));
}
}  // namespace

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  require_same_shape(a, b, "add");
  Tensor out = make_output(a.shape(), track(a) || track(b), "add");
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] + b.data()[i];
  ensure_finite(out, "add");
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi] {
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        if (ai->requires_grad) ai->grad[i] += oi->grad[i];
        if (bi->requires_grad) bi->grad[i] += oi->grad[i];
      }
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_defined(a, "sub");
  require_defined(b, "sub");
  require_same_shape(a, b, "sub");
  Tensor out = make_output(a.shape(), track(a) || track(b), "sub");
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] - b.data()[i];
  ensure_finite(out, "sub");
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi] {
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        if (ai->requires_grad) ai->grad[i] += oi->grad[i];
        if (bi->requires_grad) bi->grad[i] -= oi->grad[i];
      }
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  require_same_shape(a, b, "mul");
  Tensor out = make_output(a.shape(), track(a) || track(b), "mul");
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  ensure_finite(out, "mul");
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record([ai, bi, oi] {
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        if (ai->requires_grad) ai->grad[i] += oi->grad[i] * bi->data[i];
        if (bi->requires_grad) bi->grad[i] += oi->grad[i] * ai->data[i];
      }
    });
  }
  return out;
}

Tensor Tape::scale(const Tensor& x, double c) {
  require_defined(x, "scale");
  Tensor out = make_output(x.shape(), track(x), "scale");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = x.data()[i] * c;
  ensure_finite(out, "scale");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, c] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += c * oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::add_scalar(const Tensor& x, double c) {
  require_defined(x, "add_scalar");
  Tensor out = make_output(x.shape(), track(x), "add_scalar");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = x.data()[i] + c;
  ensure_finite(out, "add_scalar");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::add_row(const Tensor& m, const Tensor& row) {
  require_defined(m, "add_row");
  require_defined(row, "add_row");
  require_rank2(m, "add_row");
  if (row.size() != m.cols())
    throw DataError("add_row: row of size " + std::to_string(row.size()) +
                    " against " + shape_str(m.shape()));
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = make_output({r, c}, track(m) || track(row), "add_row");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.data()[i * c + j] = m.data()[i * c + j] + row.data()[j];
  ensure_finite(out, "add_row");
  if (out.requires_grad()) {
    auto mi = m.impl_, ri = row.impl_, oi = out.impl_;
    record([mi, ri, oi, r, c] {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          if (mi->requires_grad) mi->grad[i * c + j] += oi->grad[i * c + j];
          if (ri->requires_grad) ri->grad[j] += oi->grad[i * c + j];
        }
    });
  }
  return out;
}

Tensor Tape::scale_rows(const Tensor& m, std::span<const double> w) {
  require_defined(m, "scale_rows");
  require_rank2(m, "scale_rows");
  if (w.size() != m.rows())
    throw DataError("scale_rows: " + std::to_string(w.size()) + " weights for " +
                    shape_str(m.shape()));
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = make_output({r, c}, track(m), "scale_rows");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.data()[i * c + j] = m.data()[i * c + j] * w[i];
  ensure_finite(out, "scale_rows");
  if (out.requires_grad()) {
    auto mi = m.impl_, oi = out.impl_;
    std::vector<double> wv(w.begin(), w.end());
    record([mi, oi, wv = std::move(wv), r, c] {
      if (!mi->requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          mi->grad[i * c + j] += oi->grad[i * c + j] * wv[i];
    });
  }
  return out;
}

Tensor Tape::scale_by(const Tensor& x, const Tensor& s) {
  require_defined(x, "scale_by");
  require_defined(s, "scale_by");
  if (s.size() != 1)
    throw DataError("scale_by: scale must be a scalar tensor, got " +
                    shape_str(s.shape()));
  const double sv = s.data()[0];
  Tensor out = make_output(x.shape(), track(x) || track(s), "scale_by");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = x.data()[i] * sv;
  ensure_finite(out, "scale_by");
  if (out.requires_grad()) {
    auto xi = x.impl_, si = s.impl_, oi = out.impl_;
    record([xi, si, oi] {
      const double sv = si->data[0];
      double ds = 0.0;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        if (xi->requires_grad) xi->grad[i] += oi->grad[i] * sv;
        ds += oi->grad[i] * xi->data[i];
      }
      if (si->requires_grad) si->grad[0] += ds;
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  require_defined(x, "sum");
  Tensor out = make_output({1}, track(x), "sum");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc;
  ensure_finite(out, "sum");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      const double g = oi->grad[0];
      for (std::size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += g;
    });
  }
  return out;
}

Tensor Tape::mean_rows(const Tensor& x) {
  require_defined(x, "mean_rows");
  require_rank2(x, "mean_rows");
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out = make_output({1, c}, track(x), "mean_rows");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data()[j] += x.data()[i * c + j];
  for (std::size_t j = 0; j < c; ++j) out.data()[j] /= static_cast<double>(r);
  ensure_finite(out, "mean_rows");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, r, c] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          xi->grad[i * c + j] += oi->grad[j] / static_cast<double>(r);
    });
  }
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  require_defined(x, "sigmoid");
  Tensor out = make_output(x.shape(), track(x), "sigmoid");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    // split by sign so exp never overflows
    out.data()[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                           : std::exp(v) / (1.0 + std::exp(v));
  }
  ensure_finite(out, "sigmoid");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        const double y = oi->data[i];
        xi->grad[i] += oi->grad[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

Tensor Tape::tanh(const Tensor& x) {
  require_defined(x, "tanh");
  Tensor out = make_output(x.shape(), track(x), "tanh");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(x.data()[i]);
  ensure_finite(out, "tanh");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        const double y = oi->data[i];
        xi->grad[i] += oi->grad[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

Tensor Tape::relu(const Tensor& x) {
  require_defined(x, "relu");
  Tensor out = make_output(x.shape(), track(x), "relu");
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = x.data()[i] > 0 ? x.data()[i] : 0.0;
  ensure_finite(out, "relu");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i)
        if (xi->data[i] > 0) xi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::gelu(const Tensor& x) {
  require_defined(x, "gelu");
  Tensor out = make_output(x.shape(), track(x), "gelu");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    const double t = std::tanh(kGeluC1 * (v + kGeluC2 * v * v * v));
    out.data()[i] = 0.5 * v * (1.0 + t);
  }
  ensure_finite(out, "gelu");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        const double v = xi->data[i];
        const double t = std::tanh(kGeluC1 * (v + kGeluC2 * v * v * v));
        const double du = kGeluC1 * (1.0 + 3.0 * kGeluC2 * v * v);
        const double dy = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
        xi->grad[i] += oi->grad[i] * dy;
      }
    });
  }
  return out;
}

Tensor Tape::softmax(const Tensor& x) {
  require_defined(x, "softmax");
  if (x.rank() == 0 || x.shape().back() < 1)
    throw DataError("softmax: empty last axis in " + shape_str(x.shape()));
  auto [nrows, width] = last_axis(x);
  Tensor out = make_output(x.shape(), track(x), "softmax");
  for (std::size_t i = 0; i < nrows; ++i) {
    const double* in = x.data().data() + i * width;
    double* o = out.data().data() + i * width;
    double mx = in[0];
    for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      o[j] = std::exp(in[j] - mx);
      denom += o[j];
    }
    for (std::size_t j = 0; j < width; ++j) o[j] /= denom;
  }
  ensure_finite(out, "softmax");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, nrows = nrows, width = width] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < nrows; ++i) {
        const double* y = oi->data.data() + i * width;
        const double* g = oi->grad.data() + i * width;
        double dot = 0.0;
        for (std::size_t j = 0; j < width; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < width; ++j)
          xi->grad[i * width + j] += y[j] * (g[j] - dot);
      }
    });
  }
  return out;
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        double eps) {
  require_defined(x, "layer_norm");
  require_defined(gamma, "layer_norm");
  require_defined(beta, "layer_norm");
  if (eps <= 0) throw DataError("layer_norm: eps must be positive");
  const std::size_t d = x.shape().back();
  if (d < 2)
    throw DataError("layer_norm: last axis of size " + std::to_string(d) +
                    " has degenerate variance");
  if (gamma.size() != d || beta.size() != d)
    throw DataError("layer_norm: gamma/beta size must be " + std::to_string(d));
  auto [nrows, width] = last_axis(x);
  Tensor out = make_output(x.shape(), track(x) || track(gamma) || track(beta),
                           "layer_norm");
  std::vector<double> mean(nrows), invstd(nrows);
  for (std::size_t i = 0; i < nrows; ++i) {
    const double* in = x.data().data() + i * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += in[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(width);
    mean[i] = mu;
    invstd[i] = 1.0 / std::sqrt(var + eps);
    double* o = out.data().data() + i * width;
    for (std::size_t j = 0; j < width; ++j)
      o[j] = gamma.data()[j] * (in[j] - mu) * invstd[i] + beta.data()[j];
  }
  ensure_finite(out, "layer_norm");
  if (out.requires_grad()) {
    auto xi = x.impl_, gi = gamma.impl_, bi = beta.impl_, oi = out.impl_;
    record([xi, gi, bi, oi, mean = std::move(mean), invstd = std::move(invstd),
            nrows = nrows, width = width] {
      const double w = static_cast<double>(width);
      for (std::size_t i = 0; i < nrows; ++i) {
        const double* in = xi->data.data() + i * width;
        const double* g = oi->grad.data() + i * width;
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const double xhat = (in[j] - mean[i]) * invstd[i];
          const double dxhat = g[j] * gi->data[j];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
          if (gi->requires_grad) gi->grad[j] += g[j] * xhat;
          if (bi->requires_grad) bi->grad[j] += g[j];
        }
        if (xi->requires_grad) {
          for (std::size_t j = 0; j < width; ++j) {
            const double xhat = (in[j] - mean[i]) * invstd[i];
            const double dxhat = g[j] * gi->data[j];
            xi->grad[i * width + j] +=
                invstd[i] * (dxhat - sum_dxhat / w - xhat * sum_dxhat_xhat / w);
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::dropout(const Tensor& x, double p, Rng& rng, bool train) {
  require_defined(x, "dropout");
  if (p < 0.0 || p >= 1.0)
    throw DataError("dropout: p must lie in [0,1), got " + std::to_string(p));
  if (!train || p == 0.0) return x;  // inference path: exact identity
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = rng.uniform() >= p ? keep_scale : 0.0;
  Tensor out = make_output(x.shape(), track(x), "dropout");
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = x.data()[i] * mask[i];
  ensure_finite(out, "dropout");
  if (out.requires_grad()) {
    auto xi = x.impl_, oi = out.impl_;
    record([xi, oi, mask = std::move(mask)] {
      if (!xi->requires_grad) return;
      for (std::size_t i = 0; i < oi->grad.size(); ++i)
        xi->grad[i] += oi->grad[i] * mask[i];
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw DataError("backward: loss must be a scalar" +
                    (loss.defined() ? ", got " + shape_str(loss.shape()) : std::string()));
  if (consumed_) throw DataError("backward: tape already consumed");
  if (loss.impl_->producer != this)
    throw DataError("backward: loss was not produced on this tape");
  if (!loss.requires_grad())
    throw DataError("backward: loss does not depend on any requires_grad tensor");
  consumed_ = true;
  loss.impl_->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                  const Tensor& x, double eps) {
  std::vector<double> base(x.data().begin(), x.data().end());

  auto eval = [&](const std::vector<double>& vals, bool with_grad,
                  std::vector<double>* grad_out) {
    Tensor in = Tensor::from_data(x.shape(), vals, with_grad);
    Tape tape(with_grad);
    Tensor y = f(tape, in);
    if (y.size() != 1) throw DataError("grad_check: f must be scalar-valued");
    if (with_grad) {
      tape.backward(y);
      grad_out->assign(in.grad().begin(), in.grad().end());
    }
    return y.value();
  };

  std::vector<double> analytic;
  const double v1 = eval(base, true, &analytic);
  std::vector<double> analytic2;
  const double v2 = eval(base, true, &analytic2);
  if (std::memcmp(&v1, &v2, sizeof(double)) != 0)
    throw NumericError("grad_check: forward pass is not deterministic");

  double worst = 0.0;
  std::vector<double> probe = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    probe[i] = base[i] + eps;
    const double fp = eval(probe, false, nullptr);
    probe[i] = base[i] - eps;
    const double fm = eval(probe, false, nullptr);
    probe[i] = base[i];
    const double cd = (fp - fm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(cd), 1e-7});
    worst = std::max(worst, std::abs(analytic[i] - cd) / denom);
  }
  return worst;
}

}  // namespace gazekit
