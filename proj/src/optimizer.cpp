#include "optswitch/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace optswitch {

OptimizationResult nelder_mead(const ObjectiveFn& f, std::span<const double> x0, const SimplexConfig& cfg) {
  if (x0.empty()) throw std::invalid_argument("nelder_mead needs at least one coordinate");
  if (!cfg.valid()) throw std::invalid_argument("simplex coefficients out of range");
  const std::size_t m = x0.size();
  const long max_evals = cfg.max_fn_evals > 0 ? cfg.max_fn_evals : 200 * static_cast<long>(m);
  const long max_iters = cfg.max_iters > 0 ? cfg.max_iters : 200 * static_cast<long>(m);

  OptimizationResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> v(m + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < m; ++i) {
    double& c = v[i + 1][i];
    c = c != 0.0 ? c * (1.0 + cfg.restart_spread) : cfg.zero_spread;
  }
  std::vector<double> fv(m + 1);
  for (std::size_t i = 0; i <= m; ++i) fv[i] = eval(v[i]);

  std::vector<std::size_t> order(m + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> nv;
    std::vector<double> nf;
    for (std::size_t i : order) {
      nv.push_back(std::move(v[i]));
      nf.push_back(fv[i]);
    }
    v = std::move(nv);
    fv = std::move(nf);
  };

  std::vector<double> c(m), xr(m), xe(m), xc(m);
  auto along = [&](std::vector<double>& out, double coef, const std::vector<double>& from) {
    // out = c + coef (c - from)
    for (std::size_t i = 0; i < m; ++i) out[i] = c[i] + coef * (c[i] - from[i]);
  };

  sort_simplex();
  for (;;) {
    double fspread = 0.0, xspread = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
      fspread = std::max(fspread, std::fabs(fv[i] - fv[0]));
      for (std::size_t k = 0; k < m; ++k) xspread = std::max(xspread, std::fabs(v[i][k] - v[0][k]));
    }
    if (fspread <= cfg.f_tol && xspread <= cfg.x_tol) {
      res.converged = true;
      break;
    }
    if (fspread == 0.0) {
      // equal values: a plateau, or vertices straddling a minimum. the centroid tells
      std::vector<double> mid(m, 0.0);
      for (const auto& vi : v)
        for (std::size_t k = 0; k < m; ++k) mid[k] += vi[k] / static_cast<double>(m + 1);
      const double fm = eval(mid);
      if (!(fm < fv[0])) {
        res.converged = true;
        break;
      }
      v[m] = std::move(mid);
      fv[m] = fm;
      sort_simplex();
      continue;
    }
    if (res.evals >= max_evals || res.iterations >= max_iters) break;
    ++res.iterations;

    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) c[k] += v[i][k];
    for (auto& ck : c) ck /= static_cast<double>(m);

    const std::vector<double>& worst = v[m];
    along(xr, cfg.rho, worst);
    const double fr = eval(xr);
    bool shrink = false;
    if (fr < fv[0]) {
      along(xe, cfg.rho * cfg.chi, worst);
      const double fe = eval(xe);
      if (fe < fr) {
        v[m] = xe;
        fv[m] = fe;
      } else {
        v[m] = xr;
        fv[m] = fr;
      }
    } else if (fr < fv[m - 1]) {
      v[m] = xr;
      fv[m] = fr;
    } else if (fr < fv[m]) {
      along(xc, cfg.rho * cfg.gamma, worst); // outside
      const double fc = eval(xc);
      if (fc <= fr) {
        v[m] = xc;
        fv[m] = fc;
      } else {
        shrink = true;
      }
    } else {
      along(xc, -cfg.gamma, worst); // inside
      const double fc = eval(xc);
      if (fc < fv[m]) {
        v[m] = xc;
        fv[m] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t k = 0; k < m; ++k) v[i][k] = v[0][k] + cfg.sigma * (v[i][k] - v[0][k]);
        fv[i] = eval(v[i]);
      }
    }
    sort_simplex();
    res.best_trace.push_back(fv[0]);
  }
  res.best_point = v[0];
  res.best_value = fv[0];
  return res;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lk(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    }
  }
  if (err) std::rethrow_exception(err);
}

OptimizationResult multi_start_minimize(const ObjectiveFn& f, const Bounds& bounds, const SimplexConfig& cfg,
                                        const std::vector<std::vector<double>>& starts) {
  const std::size_t m = bounds.dim();
  if (m == 0 || bounds.hi.size() != m) throw std::invalid_argument("bounds need matching lo/hi of positive size");
  if (cfg.restarts < 1) throw std::invalid_argument("need at least one restart");
  std::vector<double> width(m);
  for (std::size_t i = 0; i < m; ++i) {
    width[i] = bounds.hi[i] - bounds.lo[i];
    if (!(width[i] > 0.0)) throw std::invalid_argument("bounds must have hi > lo");
  }
  auto to_x = [&](std::span<const double> u) {
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = bounds.lo[i] + u[i] * width[i];
    return x;
  };
  const ObjectiveFn scaled = [&](std::span<const double> u) { return f(to_x(u)); };

  const auto R = static_cast<std::size_t>(cfg.restarts);
  std::vector<OptimizationResult> runs(R);
  parallel_for(R, cfg.threads, [&](std::size_t r) {
    std::vector<double> u0(m);
    if (r < starts.size() && starts[r].size() == m) {
      for (std::size_t i = 0; i < m; ++i) u0[i] = (starts[r][i] - bounds.lo[i]) / width[i];
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                        static_cast<std::uint32_t>(r), 0x6e6d7374u};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& ui : u0) ui = u(rng);
    }
    runs[r] = nelder_mead(scaled, u0, cfg);
    runs[r].best_point = to_x(runs[r].best_point);
    runs[r].restart_index = static_cast<int>(r);
  });

  OptimizationResult best = runs[0];
  long total = 0;
  for (const auto& r : runs) {
    total += r.evals;
    if (r.best_value < best.best_value) best = r;
  }
  // fresh simplex at the winner; a collapsed simplex can stall in a curved valley
  if (best.best_value < cfg.sentinel) {
    for (int p = 0; p < cfg.polish; ++p) {
      std::vector<double> u0(m);
      for (std::size_t i = 0; i < m; ++i) u0[i] = (best.best_point[i] - bounds.lo[i]) / width[i];
      OptimizationResult again = nelder_mead(scaled, u0, cfg);
      total += again.evals;
      if (!(again.best_value < best.best_value - cfg.f_tol)) {
        if (again.best_value < best.best_value) {
          best.best_value = again.best_value;
          best.best_point = to_x(again.best_point);
        }
        break;
      }
      best.best_value = again.best_value;
      best.best_point = to_x(again.best_point);
      best.converged = again.converged;
      best.iterations += again.iterations;
    }
  }
  best.evals = total;
  if (!(best.best_value < cfg.sentinel)) best.converged = false;
  return best;
}

} // namespace optswitch
