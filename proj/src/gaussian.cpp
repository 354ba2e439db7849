#include "qf/gaussian.hpp"

namespace qf {

double hermite_eval_1d(int r, double x) {
  if (r < 0) throw argument_error("hermite_eval_1d: negative degree");
  if (r == 0) return 1.0;
  double prev = 1.0, cur = x;  // h_0, h_1
  for (int k = 1; k < r; ++k) {
    const double next = (x * cur - std::sqrt(double(k)) * prev) / std::sqrt(double(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite_eval(const std::vector<int>& sigma, const rvec& x) {
  if (static_cast<Eigen::Index>(sigma.size()) > x.size())
    throw argument_error("hermite_eval: point has fewer coordinates than the multi-index");
  double acc = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) acc *= hermite_eval_1d(sigma[i], x[i]);
  return acc;
}

GaussianPolynomial::GaussianPolynomial(int n_vars) : n_vars_(n_vars) {
  if (n_vars < 0) throw argument_error("GaussianPolynomial: negative variable count");
}

GaussianPolynomial GaussianPolynomial::constant(int n_vars, double c) {
  GaussianPolynomial f(n_vars);
  f.set_term({}, c);
  return f;
}

GaussianPolynomial GaussianPolynomial::coordinate(int n_vars, int i) {
  GaussianPolynomial f(n_vars);
  f.set_term({{i, 1}}, 1.0);
  return f;
}

HKey GaussianPolynomial::pack(const SparseIndex& sigma, int n_vars) {
  HKey key;
  key.reserve(sigma.size());
  int total = 0;
  for (auto [var, power] : sigma) {
    if (var < 1 || var > n_vars) throw argument_error("GaussianPolynomial: variable out of range");
    if (power < 1 || power > kMaxHermiteDegree)
      throw argument_error("GaussianPolynomial: power outside [1,8]");
    total += power;
    key.push_back(std::uint32_t(var - 1) << 8 | std::uint32_t(power));
  }
  if (total > kMaxHermiteDegree)
    throw argument_error("GaussianPolynomial: degree cap 8 exceeded");
  std::sort(key.begin(), key.end());
  for (std::size_t i = 1; i < key.size(); ++i)
    if ((key[i] >> 8) == (key[i - 1] >> 8))
      throw argument_error("GaussianPolynomial: repeated variable in multi-index");
  return key;
}

SparseIndex GaussianPolynomial::unpack(const HKey& key) {
  SparseIndex sigma;
  sigma.reserve(key.size());
  for (std::uint32_t e : key) sigma.emplace_back(int(e >> 8) + 1, int(e & 0xff));
  return sigma;
}

int GaussianPolynomial::key_degree(const HKey& key) {
  int d = 0;
  for (std::uint32_t e : key) d += int(e & 0xff);
  return d;
}

void GaussianPolynomial::set_term(const SparseIndex& sigma, double c) {
  HKey key = pack(sigma, n_vars_);
  if (c == 0.0) {
    terms_.erase(key);
    recompute_degree();
    return;
  }
  terms_[std::move(key)] = c;
  recompute_degree();
}

double GaussianPolynomial::term(const SparseIndex& sigma) const {
  const auto it = terms_.find(pack(sigma, n_vars_));
  return it == terms_.end() ? 0.0 : it->second;
}

void GaussianPolynomial::recompute_degree() {
  degree_ = 0;
  for (const auto& [key, c] : terms_) degree_ = std::max(degree_, key_degree(key));
}

bool GaussianPolynomial::multilinear() const {
  for (const auto& [key, c] : terms_)
    for (std::uint32_t e : key)
      if ((e & 0xff) > 1) return false;
  return true;
}

double GaussianPolynomial::mean() const {
  const auto it = terms_.find(HKey{});
  return it == terms_.end() ? 0.0 : it->second;
}

double GaussianPolynomial::l2_norm_sq() const {
  double acc = 0.0;
  for (const auto& [key, c] : terms_) acc += c * c;
  return acc;
}

double GaussianPolynomial::variance() const {
  double acc = 0.0;
  for (const auto& [key, c] : terms_)
    if (!key.empty()) acc += c * c;
  return acc;
}

double GaussianPolynomial::influence(int i) const {
  if (i < 1 || i > n_vars_) throw argument_error("influence: variable out of range");
  const std::uint32_t var = std::uint32_t(i - 1);
  double acc = 0.0;
  for (const auto& [key, c] : terms_)
    for (std::uint32_t e : key)
      if ((e >> 8) == var) {
        acc += c * c;
        break;
      }
  return acc;
}

double GaussianPolynomial::evaluate(const rvec& x) const {
  if (x.size() < n_vars_) throw argument_error("evaluate: point has too few coordinates");
  double acc = 0.0;
  for (const auto& [key, c] : terms_) {
    double v = c;
    for (std::uint32_t e : key) v *= hermite_eval_1d(int(e & 0xff), x[int(e >> 8)]);
    acc += v;
  }
  return acc;
}

GaussianPolynomial GaussianPolynomial::scaled(double a) const {
  GaussianPolynomial out(n_vars_);
  if (a == 0.0) return out;
  out.terms_ = terms_;
  for (auto& [key, c] : out.terms_) c *= a;
  out.degree_ = degree_;
  return out;
}

GaussianPolynomial ornstein_uhlenbeck(const GaussianPolynomial& f, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw argument_error("ornstein_uhlenbeck: rho must lie in [0,1]");
  GaussianPolynomial out(f.n_vars());
  for (const auto& [key, c] : f.terms_) {
    const double scaled = c * int_pow(rho, GaussianPolynomial::key_degree(key));
    if (scaled != 0.0) out.terms_[key] = scaled;
  }
  out.recompute_degree();
  return out;
}

GaussianPolynomial multilinear_truncate(const GaussianPolynomial& f) {
  GaussianPolynomial out(f.n_vars());
  for (const auto& [key, c] : f.terms_) {
    bool flat = true;
    for (std::uint32_t e : key)
      if ((e & 0xff) > 1) {
        flat = false;
        break;
      }
    if (flat) out.terms_[key] = c;
  }
  out.recompute_degree();
  return out;
}

namespace {

// Expansion of h_r((y_1+...+y_t)/sqrt(t)) into products of fresh-variable
// Hermite factors: sum over compositions alpha of r into t parts of
// sqrt(r!/prod alpha_j!) * t^{-r/2} * prod h_{alpha_j}(y_j).
void compositions(int r, int t, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
  if (t == 1) {
    cur.push_back(r);
    emit(cur);
    cur.pop_back();
    return;
  }
  for (int head = 0; head <= r; ++head) {
    cur.push_back(head);
    compositions(r - head, t - 1, cur, emit);
    cur.pop_back();
  }
}

double factorial(int n) {
  double acc = 1.0;
  for (int k = 2; k <= n; ++k) acc *= double(k);
  return acc;
}

}  // namespace

GaussianPolynomial variable_split(const GaussianPolynomial& f, int t) {
  if (t < 1) throw argument_error("variable_split: t must be at least 1");
  const int n = f.n_vars();
  GaussianPolynomial out(n * t);
  for (const auto& [key, c] : f.terms_) {
    // children of this term: one (fresh multi-index, weight) list per factor
    std::vector<std::pair<HKey, double>> acc = {{HKey{}, c}};
    for (std::uint32_t e : key) {
      const int var = int(e >> 8);  // 0-based original variable
      const int r = int(e & 0xff);
      std::vector<std::pair<HKey, double>> expanded;
      std::vector<int> cur;
      compositions(r, t, cur, [&](const std::vector<int>& alpha) {
        double w = std::sqrt(factorial(r)) * int_pow(1.0 / std::sqrt(double(t)), r);
        HKey frag;
        for (int j = 0; j < t; ++j) {
          if (alpha[j] == 0) continue;
          w /= std::sqrt(factorial(alpha[j]));
          frag.push_back(std::uint32_t(var * t + j) << 8 | std::uint32_t(alpha[j]));
        }
        for (const auto& [prefix, pw] : acc) {
          HKey merged = prefix;
          merged.insert(merged.end(), frag.begin(), frag.end());
          expanded.emplace_back(std::move(merged), pw * w);
        }
      });
      acc = std::move(expanded);
    }
    for (auto& [child, w] : acc) {
      std::sort(child.begin(), child.end());
      out.terms_[child] += w;
    }
  }
  // collation may cancel exactly; drop zeros so degree() stays honest
  for (auto it = out.terms_.begin(); it != out.terms_.end();)
    it = it->second == 0.0 ? out.terms_.erase(it) : std::next(it);
  out.recompute_degree();
  return out;
}

CorrelatedGaussianSource::CorrelatedGaussianSource(int n_vars, double rho, std::uint64_t seed)
    : n_vars_(n_vars), rho_(rho), seed_(seed), rng_{seed} {
  if (n_vars < 0) throw argument_error("CorrelatedGaussianSource: negative variable count");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw argument_error("CorrelatedGaussianSource: rho must lie in [0,1]");
}

void CorrelatedGaussianSource::sample_pair(std::int64_t index, rvec& g, rvec& h) const {
  g.resize(n_vars_);
  h.resize(n_vars_);
  const double tail = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
  for (int i = 0; i < n_vars_; ++i) {
    const double gi = rng_.normal(2 * std::uint64_t(i), std::uint64_t(index));
    const double gp = rng_.normal(2 * std::uint64_t(i) + 1, std::uint64_t(index));
    g[i] = gi;
    h[i] = rho_ * gi + tail * gp;
  }
}

rvec CorrelatedGaussianSource::sample_a(std::int64_t index) const {
  rvec g(n_vars_);
  for (int i = 0; i < n_vars_; ++i)
    g[i] = rng_.normal(2 * std::uint64_t(i), std::uint64_t(index));
  return g;
}

rvec CorrelatedGaussianSource::sample_b(std::int64_t index) const {
  rvec g, h;
  sample_pair(index, g, h);
  return h;
}

ReducedFunction::ReducedFunction(GaussianPolynomial f, rmat m)
    : f_(std::move(f)), m_(std::move(m)) {
  if (f_.n_vars() != m_.rows())
    throw argument_error("ReducedFunction: map rows must match variable count");
}

double ReducedFunction::operator()(const rvec& x) const {
  if (x.size() != m_.cols()) throw argument_error("ReducedFunction: wrong point dimension");
  const double norm = x.norm();
  if (norm == 0.0) throw domain_error("ReducedFunction: undefined at the origin");
  const rvec y = m_ * x / norm;
  return f_.evaluate(y);
}

ReducedFunction dimension_reduce(const GaussianPolynomial& f, const rmat& m) {
  if (!f.multilinear())
    throw precondition_error("dimension_reduce: polynomial must be multilinear");
  if (f.n_vars() != m.rows())
    throw argument_error("dimension_reduce: map shape mismatch");
  return ReducedFunction(f, m);
}

}  // namespace qf
