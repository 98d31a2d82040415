#include "gyroqfi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gyroqfi/errors.hpp"

namespace gyro::oracle {

namespace {

constexpr cd kI{0.0, 1.0};

SparseOp ladder(int n) {
  SparseOp a(n, n);
  for (int k = 1; k < n; ++k) a.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
  a.makeCompressed();
  return a;
}

SparseOp eye(int n) {
  SparseOp i(n, n);
  i.setIdentity();
  return i;
}

SparseOp kron(const SparseOp& x, const SparseOp& y) {
  std::vector<Eigen::Triplet<cd>> t;
  t.reserve(static_cast<std::size_t>(x.nonZeros() * y.nonZeros()));
  for (int kx = 0; kx < x.outerSize(); ++kx)
    for (SparseOp::InnerIterator ix(x, kx); ix; ++ix)
      for (int ky = 0; ky < y.outerSize(); ++ky)
        for (SparseOp::InnerIterator iy(y, ky); iy; ++iy)
          t.emplace_back(ix.row() * y.rows() + iy.row(), ix.col() * y.cols() + iy.col(),
                         ix.value() * iy.value());
  SparseOp r(x.rows() * y.rows(), x.cols() * y.cols());
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

// Tr(op rho).
cd expect(const SparseOp& op, const DensityMatrix& rho) {
  cd s{0.0, 0.0};
  for (int k = 0; k < op.outerSize(); ++k)
    for (SparseOp::InnerIterator it(op, k); it; ++it) s += it.value() * rho(it.col(), it.row());
  return s;
}

SparseOp adj(const SparseOp& x) { return SparseOp(x.adjoint()); }

}  // namespace

void FockConfig::validate() const {
  for (int n : {n_cav_ccw, n_cav_cw, n_mech})
    if (n < 2 || n > 16) throw ConfigError("Fock truncation must lie in [2, 16]");
  if (!(dt > 0.0 && dt <= 1e-2)) throw ConfigError("Fock step dt must lie in (0, 1e-2]");
  if (!(leak_tolerance > 0.0)) throw ConfigError("leak_tolerance must be > 0");
}

Operators::Operators(const FockConfig& cfg) {
  const SparseOp i1 = eye(cfg.n_cav_ccw), i2 = eye(cfg.n_cav_cw), ib = eye(cfg.n_mech);
  a_ccw = kron(kron(ladder(cfg.n_cav_ccw), i2), ib);
  a_cw = kron(kron(i1, ladder(cfg.n_cav_cw)), ib);
  b = kron(kron(i1, i2), ladder(cfg.n_mech));
  n_ccw = adj(a_ccw) * a_ccw;
  n_cw = adj(a_cw) * a_cw;
  n_b = adj(b) * b;
  identity = eye(cfg.dimension());
}

FockSolver::FockSolver(const PhysicalParams& p, const FockConfig& cfg)
    : p_(p), cfg_(cfg), ops_((cfg.validate(), cfg)) {
  const int n = cfg.dimension();
  damping_ = SparseOp(n, n);
  const auto add_jump = [&](double rate, const SparseOp& c) {
    if (rate <= 0.0) return;
    const SparseOp scaled = std::sqrt(rate) * c;
    damping_ += 0.5 * SparseOp(adj(scaled) * scaled);
    Ladder l{std::vector<int>(n, -1), std::vector<cd>(n, cd{0.0, 0.0})};
    for (int k = 0; k < scaled.outerSize(); ++k)
      for (SparseOp::InnerIterator it(scaled, k); it; ++it) {
        if (l.col[it.row()] >= 0) throw std::logic_error("jump operator is not ladder-like");
        l.col[it.row()] = static_cast<int>(it.col());
        l.value[it.row()] = it.value();
      }
    jumps_.push_back(std::move(l));
  };
  add_jump(p.kappa, ops_.a_ccw);
  add_jump(p.kappa, ops_.a_cw);
  add_jump(p.gamma_m * (p.n_bar_m + 1.0), ops_.b);
  add_jump(p.gamma_m * p.n_bar_m, adj(ops_.b));
}

SparseOp FockSolver::hamiltonian(double delta_c_now) const {
  const double g0 = single_photon_coupling(p_);
  const double det_ccw = delta_c_now + sagnac_shift(p_, p_.omega, Mode::ccw);
  const double det_cw = delta_c_now + sagnac_shift(p_, p_.omega, Mode::cw);
  const SparseOp x_b = ops_.b + adj(ops_.b);
  const SparseOp& driven = p_.drive == DriveDirection::ccw ? ops_.a_ccw : ops_.a_cw;

  SparseOp h = det_ccw * ops_.n_ccw + det_cw * ops_.n_cw + ops_.n_b;
  h -= g0 * (SparseOp(ops_.n_ccw + ops_.n_cw) * x_b);
  h += p_.backscatter_J * (SparseOp(adj(ops_.a_cw) * ops_.a_ccw) + SparseOp(adj(ops_.a_ccw) * ops_.a_cw));
  h += (kI * p_.epsilon) * (adj(driven) - driven);
  return h;
}

DensityMatrix FockSolver::initial_state(InitialPhonons phonons) const {
  const int nb = cfg_.n_mech;
  Eigen::VectorXd pops = Eigen::VectorXd::Zero(nb);
  const double n = phonons == InitialPhonons::thermal ? p_.n_bar_m : 0.0;
  for (int k = 0; k < nb; ++k) pops[k] = std::pow(n, k) / std::pow(n + 1.0, k + 1);
  pops /= pops.sum();
  DensityMatrix rho = DensityMatrix::Zero(cfg_.dimension(), cfg_.dimension());
  for (int k = 0; k < nb; ++k) rho(k, k) = pops[k];
  return rho;
}

DensityMatrix FockSolver::fock_state(int n_ccw, int n_cw, int n_mech) const {
  if (n_ccw < 0 || n_ccw >= cfg_.n_cav_ccw || n_cw < 0 || n_cw >= cfg_.n_cav_cw || n_mech < 0 ||
      n_mech >= cfg_.n_mech)
    throw ConfigError("Fock state outside the truncated space");
  const int idx = (n_ccw * cfg_.n_cav_cw + n_cw) * cfg_.n_mech + n_mech;
  DensityMatrix rho = DensityMatrix::Zero(cfg_.dimension(), cfg_.dimension());
  rho(idx, idx) = 1.0;
  return rho;
}

DensityMatrix FockSolver::rhs(const DensityMatrix& rho, double delta_c_now) const {
  DensityMatrix out(rho.rows(), rho.cols()), work(rho.rows(), rho.cols());
  apply(rho, effective_generator(delta_c_now), out, work);
  return out;
}

std::vector<FockSolver::Term> FockSolver::effective_generator(double delta_c_now) const {
  // -i H_eff rho + h.c. is the coherent part plus the anticommutator, so the
  // -i is folded in here.
  const SparseOp g = -kI * (hamiltonian(delta_c_now) - kI * damping_);
  std::vector<Term> terms;
  terms.reserve(static_cast<std::size_t>(g.nonZeros()));
  for (int k = 0; k < g.outerSize(); ++k)
    for (SparseOp::InnerIterator it(g, k); it; ++it)
      terms.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  return terms;
}

void FockSolver::apply(const DensityMatrix& rho, const std::vector<Term>& gen, DensityMatrix& out,
                       DensityMatrix& work) const {
  work.setZero();
  for (const auto& t : gen) work.row(t.row) += t.value * rho.row(t.col);
  out = work + work.adjoint();
  const Eigen::Index n = rho.rows();
  for (const auto& c : jumps_)
    for (Eigen::Index i = 0; i < n; ++i) {
      const int ci = c.col[i];
      if (ci < 0) continue;
      const cd vi = c.value[i];
      for (Eigen::Index k = 0; k < n; ++k) {
        const int ck = c.col[k];
        if (ck >= 0) out(i, k) += vi * std::conj(c.value[k]) * rho(ci, ck);
      }
    }
}

double FockSolver::top_level_population(const DensityMatrix& rho) const {
  const int n1 = cfg_.n_cav_ccw, n2 = cfg_.n_cav_cw, nb = cfg_.n_mech;
  double top1 = 0.0, top2 = 0.0, topb = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < nb; ++k) {
        const int idx = (i * n2 + j) * nb + k;
        const double pop = rho(idx, idx).real();
        if (i == n1 - 1) top1 += pop;
        if (j == n2 - 1) top2 += pop;
        if (k == nb - 1) topb += pop;
      }
  return std::max({top1, top2, topb});
}

void FockSolver::check_leak(const DensityMatrix& rho) const {
  const double top = top_level_population(rho);
  if (!std::isfinite(top)) throw NonFinite("density matrix became non-finite");
  if (top > cfg_.leak_tolerance)
    throw TruncationLeak("population " + std::to_string(top) +
                         " in the top Fock level exceeds the leak tolerance");
}

void FockSolver::advance(DensityMatrix& rho, double t0, double t1, double delta_c_now) const {
  if (!(t1 > t0)) return;
  const int steps = static_cast<int>(std::ceil((t1 - t0) / cfg_.dt - 1e-9));
  const double h = (t1 - t0) / steps;
  const auto op = effective_generator(delta_c_now);
  const auto n = rho.rows();
  DensityMatrix k(n, n), acc(n, n), stage(n, n), work(n, n);
  for (int s = 0; s < steps; ++s) {
    apply(rho, op, k, work);
    acc = k;
    stage = rho + (0.5 * h) * k;
    apply(stage, op, k, work);
    acc += 2.0 * k;
    stage = rho + (0.5 * h) * k;
    apply(stage, op, k, work);
    acc += 2.0 * k;
    stage = rho + h * k;
    apply(stage, op, k, work);
    acc += k;
    rho += (h / 6.0) * acc;
    check_leak(rho);
  }
}

Sample FockSolver::measure(const DensityMatrix& rho, double t) const {
  using namespace moment;
  const SparseOp a1d = adj(ops_.a_ccw), a2d = adj(ops_.a_cw), bd = adj(ops_.b);
  const SparseOp *a1 = &ops_.a_ccw, *a2 = &ops_.a_cw, *b = &ops_.b;

  Sample s;
  s.t = t;
  s.trace = rho.trace().real();
  s.top_level_population = top_level_population(rho);
  const cd m1 = expect(*a1, rho), m2 = expect(*a2, rho), mb = expect(*b, rho);
  s.amps = {m1, m2, mb};

  struct Pair {
    int index;
    const SparseOp* x;
    const SparseOp* y;
    cd mean_x;
    cd mean_y;
  };
  const cd c1 = std::conj(m1), c2 = std::conj(m2), cb = std::conj(mb);
  const Pair pairs[] = {
      {n_a1, &a1d, a1, c1, m1},     {n_a2, &a2d, a2, c2, m2},     {n_b, &bd, b, cb, mb},
      {a1d_a1d, &a1d, &a1d, c1, c1}, {a1_a1, a1, a1, m1, m1},      {a2d_a2d, &a2d, &a2d, c2, c2},
      {a2_a2, a2, a2, m2, m2},      {bd_bd, &bd, &bd, cb, cb},     {b_b, b, b, mb, mb},
      {a1d_a2, &a1d, a2, c1, m2},   {a2d_a1, &a2d, a1, c2, m1},   {a1d_a2d, &a1d, &a2d, c1, c2},
      {a1_a2, a1, a2, m1, m2},      {a1d_b, &a1d, b, c1, mb},     {a1_bd, a1, &bd, m1, cb},
      {a1d_bd, &a1d, &bd, c1, cb},  {a1_b, a1, b, m1, mb},        {a2d_b, &a2d, b, c2, mb},
      {a2_bd, a2, &bd, m2, cb},     {a2d_bd, &a2d, &bd, c2, cb},  {a2_b, a2, b, m2, mb},
  };
  for (const auto& pr : pairs)
    s.x[pr.index] = expect(SparseOp(*pr.x * *pr.y), rho) - pr.mean_x * pr.mean_y;
  return s;
}

std::vector<Sample> FockSolver::evolve(DensityMatrix rho, const DetuningSchedule& schedule,
                                       double t_end, std::span<const double> sample_times) const {
  if (!(t_end > 0.0)) throw ConfigError("t_end must be > 0");
  std::vector<double> stops;
  for (double t : sample_times)
    if (t > 0.0 && t <= t_end) stops.push_back(t);
  for (const auto& bp : schedule.breakpoints())
    if (bp.t_start > 0.0 && bp.t_start < t_end) stops.push_back(bp.t_start);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  std::vector<Sample> out;
  out.push_back(measure(rho, 0.0));
  double t = 0.0;
  for (double stop : stops) {
    advance(rho, t, stop, schedule.value_at(t));
    t = stop;
    out.push_back(measure(rho, t));
  }
  return out;
}

std::vector<AugmentedState> to_states(std::span<const Sample> samples) {
  std::vector<AugmentedState> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    AugmentedState a;
    a.amps = s.amps;
    a.x = s.x;
    a.t = s.t;
    out.push_back(a);
  }
  return out;
}

}  // namespace gyro::oracle
