#include "mingraph/discrete_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mingraph/detail/geometry_core.hpp"
#include "mingraph/detail/stencils.hpp"
#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

namespace {

using detail::Stencil;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// h_{a..}: out[a][i][j][k] = sum U_ip U_jq U_kr in[a][p][q][r] (three sequential contractions).
void to_frame3(int m, int n, const std::vector<double>& u, const std::vector<double>& in, double* out) {
  const int n3 = n * n * n;
  std::vector<double> t1(m * n3), t2(m * n3);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r) {
          double s = 0.0;
          for (int p = 0; p < n; ++p) s += u[i * n + p] * in[a * n3 + (p * n + q) * n + r];
          t1[a * n3 + (i * n + q) * n + r] = s;
        }
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < n; ++r) {
          double s = 0.0;
          for (int q = 0; q < n; ++q) s += u[j * n + q] * t1[a * n3 + (i * n + q) * n + r];
          t2[a * n3 + (i * n + j) * n + r] = s;
        }
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int r = 0; r < n; ++r) s += u[k * n + r] * t2[a * n3 + (i * n + j) * n + r];
          out[a * n3 + (i * n + j) * n + k] = s;
        }
}

Field masked_field(const GridChart& chart, int comps, const std::vector<std::uint8_t>& mask) {
  Field f(chart, comps, kNaN);
  f.valid = mask;
  return f;
}

// Exact residual sum_ij d_i(a_ij d_j f^alpha) from first and second derivatives.
void exact_mss(int n, int m, const double* P, const double* d2f, double* out) {
  std::vector<double> a(n * n), gi(n * n), da(m * n * n * n);
  double sg = 0.0;
  detail::flux_coefficients(n, m, P, a.data(), gi.data(), &sg);
  detail::flux_jacobian(n, m, P, gi.data(), sg, da.data());
  // div_j = sum_i d_i a_ij = sum_{b,k,i} da[b][k][i][j] d2f[b][k][i]
  std::vector<double> div(n, 0.0);
  for (int b = 0; b < m; ++b)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) div[j] += da[((b * n + k) * n + i) * n + j] * d2f[(b * n + k) * n + i];
  for (int al = 0; al < m; ++al) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += div[j] * P[al * n + j];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += a[i * n + j] * d2f[(al * n + i) * n + j];
    out[al] = s;
  }
}

// Sampled first and second derivatives of node values. ok marks nodes where
// every stencil met valid nodes.
void sampled_derivatives(const GridChart& chart, int m, const std::vector<double>& values,
                         const std::vector<std::uint8_t>& valid, int order, std::vector<double>& P,
                         std::vector<double>& d2f, std::vector<std::uint8_t>& ok) {
  const int n = chart.dim();
  std::vector<std::uint8_t> okP;
  detail::grid_gradient(chart, m, values, valid, order, P, okP);
  d2f.assign(chart.size() * m * n * n, kNaN);
  ok.assign(chart.size(), 0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!okP[p]) return;
    Stencil s;
    std::vector<double> d(m * n);
    double* out = &d2f[p * m * n * n];
    for (int i = 0; i < n; ++i) {
      if (!detail::second_derivative_stencil(chart, p, i, order, s) || !detail::stencil_valid(s, valid)) return;
      detail::apply_stencil(s, values.data(), m, d.data());
      for (int b = 0; b < m; ++b) out[(b * n + i) * n + i] = d[b];
      if (!detail::first_derivative_stencil(chart, p, i, order, s) || !detail::stencil_valid(s, okP)) return;
      detail::apply_stencil(s, P.data(), m * n, d.data());
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        for (int b = 0; b < m; ++b) {
          // Mixed partials from D_i(D_j f), symmetrized over the two orders.
          double& lo = out[(b * n + std::min(i, j)) * n + std::max(i, j)];
          double v = d[b * n + j];
          if (i < j) {
            lo = v;
          } else {
            lo = 0.5 * (lo + v);
            out[(b * n + i) * n + j] = lo;
          }
        }
      }
    }
    ok[p] = 1;
  });
}

void sampled_mss(const GridChart& chart, int m, const std::vector<double>& values, const std::vector<double>& P,
                 const std::vector<double>& a, const std::vector<std::uint8_t>& ok, Field& out) {
  parallel_for(chart.size(), [&](std::size_t p) {
    if (chart.boundary_distance(p) < 1 || !detail::neighborhood_valid(chart, p, 1, ok)) {
      out.valid[p] = 0;
      return;
    }
    for (int al = 0; al < m; ++al) out.at(p, al) = detail::compact_divergence(chart, p, a.data(), values.data(), m, al, P.data());
    out.valid[p] = 1;
  });
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "analytic") return Mode::analytic;
  if (name == "sampled") return Mode::sampled;
  throw InvalidInput("mode must be 'analytic' or 'sampled', got '" + name + "'");
}

const char* mode_name(Mode mode) { return mode == Mode::analytic ? "analytic" : "sampled"; }

Field sample_values(const GraphMap& map, const GridChart& chart) {
  if (chart.dim() != map.domain_dim()) throw InvalidInput("sample_values: chart dimension does not match the map");
  const int m = map.codim();
  Field out(chart, m, kNaN);
  if (auto sampled = dynamic_cast<const SampledGraph*>(&map); sampled && sampled->chart() == chart) {
    out.values = sampled->values();
  } else {
    parallel_for(chart.size(), [&](std::size_t p) {
      std::vector<double> x = chart.point(p);
      if (!map.in_domain(x)) return;
      std::vector<double> v = map.value(x);
      for (int b = 0; b < m; ++b) out.at(p, b) = v[b];
    });
  }
  for (std::size_t p = 0; p < chart.size(); ++p) {
    bool ok = true;
    for (int b = 0; b < m; ++b) ok = ok && std::isfinite(out.at(p, b));
    out.valid[p] = ok;
  }
  return out;
}

GeometryField::GeometryField(GraphMapPtr map, GridChart chart, GeometryOptions options)
    : map_(std::move(map)), chart_(std::move(chart)), opt_(options) {
  if (!map_) throw InvalidInput("GeometryField: null map");
  if (chart_.dim() != map_->domain_dim()) throw InvalidInput("GeometryField: chart dimension does not match the map");
  if (opt_.fd_order != 2 && opt_.fd_order != 4) throw InvalidInput("GeometryField: fd_order must be 2 or 4");
  if (opt_.margin < 1) throw InvalidInput("GeometryField: margin must be at least 1");
  if (opt_.mode == Mode::analytic && !map_->analytic())
    throw PreconditionError("analytic mode needs exact derivatives; map '" + map_->name() + "' is sampled");
  n_ = map_->domain_dim();
  m_ = map_->codim();
  const std::size_t N = chart_.size();
  valid_.assign(N, 0);
  interior_.assign(N, 0);
  geo_.resize(N);
  f_.assign(N * m_, kNaN);
  df_.assign(N * m_ * n_, kNaN);
  a_.assign(N * n_ * n_, kNaN);
  if (opt_.derivatives) {
    gamma_.assign(N * n_ * n_ * n_, kNaN);
    omega_.assign(N * n_ * m_ * m_, kNaN);
    omega_frame_.assign(N * n_ * m_ * m_, kNaN);
    grad_h_.assign(N * m_ * n_ * n_ * n_, kNaN);
    grad_A2_.assign(N, kNaN);
    curv_.assign(N * m_ * m_ * n_ * n_, kNaN);
  }
  mss_ = Field(chart_, m_, kNaN);
  if (opt_.mode == Mode::analytic)
    build_analytic();
  else
    build_sampled();
}

std::size_t GeometryField::interior_count() const {
  std::size_t c = 0;
  for (auto v : interior_) c += v;
  return c;
}

double GeometryField::ambient_radius2(std::size_t node) const {
  double r2 = 0.0;
  for (int a = 0; a < n_; ++a) {
    double x = chart_.coord(node, a);
    r2 += x * x;
  }
  for (double v : f(node)) r2 += v * v;
  return r2;
}

void GeometryField::finish_derived(std::size_t p, const std::vector<double>& hc, const std::vector<double>& dh,
                                   const std::vector<double>& dg, const std::vector<double>& domega) {
  const int n = n_, m = m_;
  const PointGeometry& G = geo_[p];
  const std::vector<double>& gi = G.g_inv;
  std::vector<double> U = tangent_coefficients(G.frames);

  double* gam = &gamma_[p * n * n * n];
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += gi[k * n + l] * (dg[(i * n + j) * n + l] + dg[(j * n + i) * n + l] - dg[(l * n + i) * n + j]);
        gam[(k * n + i) * n + j] = 0.5 * s;
      }

  const double* om = &omega_[p * n * m * m];
  double* omf = &omega_frame_[p * n * m * m];
  for (int i = 0; i < n; ++i)
    for (int ab = 0; ab < m * m; ++ab) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += U[i * n + k] * om[k * m * m + ab];
      omf[i * m * m + ab] = s;
    }

  // h_{a pq;k} = d_k h_apq - Gamma^l_kp h_alq - Gamma^l_kq h_apl - omega_{kab} h_bpq
  const int n3 = n * n * n;
  std::vector<double> cov(m * n3);
  for (int a = 0; a < m; ++a)
    for (int pp = 0; pp < n; ++pp)
      for (int q = 0; q < n; ++q)
        for (int k = 0; k < n; ++k) {
          double s = dh[a * n3 + (pp * n + q) * n + k];
          for (int l = 0; l < n; ++l)
            s -= gam[(l * n + k) * n + pp] * hc[(a * n + l) * n + q] + gam[(l * n + k) * n + q] * hc[(a * n + pp) * n + l];
          for (int b = 0; b < m; ++b) s -= om[(k * m + a) * m + b] * hc[(b * n + pp) * n + q];
          cov[a * n3 + (pp * n + q) * n + k] = s;
        }
  double* gh = &grad_h_[p * m * n3];
  to_frame3(m, n, U, cov, gh);
  double s2 = 0.0;
  for (int t = 0; t < m * n3; ++t) s2 += gh[t] * gh[t];
  grad_A2_[p] = s2;

  // Curvature of the normal connection in coordinates, then in the frame.
  // domega[l][k][a][b] = d_l omega_{kab}.
  std::vector<double> rc(m * m * n * n);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = domega[((k * n + l) * m + a) * m + b] - domega[((l * n + k) * m + a) * m + b];
          for (int c = 0; c < m; ++c)
            s += om[(l * m + a) * m + c] * om[(k * m + c) * m + b] - om[(k * m + a) * m + c] * om[(l * m + c) * m + b];
          rc[((a * m + b) * n + k) * n + l] = s;
        }
  // Stored as <R(e_i, e_j) nu_b, nu_a>, the order of the commutator [A_a, A_b].
  double* cv = &curv_[p * m * m * n * n];
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) s += U[i * n + k] * U[j * n + l] * rc[((b * m + a) * n + k) * n + l];
          cv[((a * m + b) * n + i) * n + j] = s;
        }
}

void GeometryField::build_analytic() {
  const int n = n_, m = m_, len = n + m;
  const bool deriv = opt_.derivatives;
  const TaylorBasis& b2 = TaylorBasis::get(n, 2);
  coef_len_ = b2.size();
  if (deriv) {
    s_coef_.assign(chart_.size() * coef_len_, kNaN);
    w_coef_.assign(chart_.size() * coef_len_, kNaN);
    a_grad_.assign(chart_.size() * n * n * n, kNaN);
  }
  parallel_for(chart_.size(), [&](std::size_t p) {
    std::vector<double> x = chart_.point(p);
    if (!map_->in_domain(x)) return;
    std::vector<Taylor> t;
    try {
      t = map_->expand(x, deriv ? 4 : 2);
    } catch (const DomainError&) {
      return;
    }
    JetAtPoint jet = jet_from_expansion(t, x, 2);
    for (double v : jet.df)
      if (!std::isfinite(v)) return;
    geo_[p] = compute_point_geometry(jet);
    const PointGeometry& G = geo_[p];
    for (int b = 0; b < m; ++b) f_[p * m + b] = jet.f[b];
    for (int k = 0; k < m * n; ++k) df_[p * m * n + k] = jet.df[k];
    for (int k = 0; k < n * n; ++k) a_[p * n * n + k] = G.sqrt_g * G.g_inv[k];
    exact_mss(n, m, jet.df.data(), jet.d2f.data(), &mss_.values[p * m]);
    valid_[p] = 1;
    interior_[p] = chart_.boundary_distance(p) >= opt_.margin;
    if (!deriv || !interior_[p]) return;

    std::vector<Taylor> dfT(m * n), d2fT(m * n * n);
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < n; ++i) {
        Taylor di = t[b].diff(i);
        dfT[b * n + i] = di.truncate(2);
        for (int j = 0; j < n; ++j) d2fT[(b * n + i) * n + j] = di.diff(j);
      }
    auto core = detail::core_geometry<Taylor>(n, m, dfT, d2fT);
    for (int k = 0; k < coef_len_; ++k) {
      s_coef_[p * coef_len_ + k] = core.A_norm2.coeff(k);
      w_coef_[p * coef_len_ + k] = core.star_omega.coeff(k);
    }
    std::vector<double> dg(n * n * n), dh(m * n * n * n), domega(n * n * m * m);
    for (int i = 0; i < n * n; ++i)
      for (int l = 0; l < n; ++l) {
        a_grad_[p * n * n * n + l * n * n + i] = core.a_flux[i].gradient(l);
        dg[l * n * n + i] = core.g[i].gradient(l);
      }
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          Taylor w(0.0);
          for (int c = 0; c < len; ++c) w = w + core.normal[a * len + c].diff(k) * core.normal[b * len + c];
          omega_[p * n * m * m + (k * m + a) * m + b] = w.value();
          for (int l = 0; l < n; ++l) domega[((l * n + k) * m + a) * m + b] = w.gradient(l);
        }
    for (int a = 0; a < m * n * n; ++a)
      for (int k = 0; k < n; ++k) dh[a * n + k] = core.h_coord[a].gradient(k);
    finish_derived(p, G.h_coord, dh, dg, domega);
  });
  for (std::size_t p = 0; p < chart_.size(); ++p) mss_.valid[p] = interior_[p];
}

void GeometryField::build_sampled() {
  const int n = n_, m = m_, len = n + m;
  const std::size_t N = chart_.size();
  Field vals = sample_values(*map_, chart_);
  std::vector<double> P, d2f;
  std::vector<std::uint8_t> ok;
  sampled_derivatives(chart_, m, vals.values, vals.valid, opt_.fd_order, P, d2f, ok);
  parallel_for(N, [&](std::size_t p) {
    if (!ok[p]) return;
    JetAtPoint jet;
    jet.n = n;
    jet.m = m;
    jet.x = chart_.point(p);
    jet.f.assign(vals.values.begin() + p * m, vals.values.begin() + (p + 1) * m);
    jet.df.assign(P.begin() + p * m * n, P.begin() + (p + 1) * m * n);
    jet.d2f.assign(d2f.begin() + p * m * n * n, d2f.begin() + (p + 1) * m * n * n);
    geo_[p] = compute_point_geometry(jet);
    for (int b = 0; b < m; ++b) f_[p * m + b] = jet.f[b];
    for (int k = 0; k < m * n; ++k) df_[p * m * n + k] = jet.df[k];
    for (int k = 0; k < n * n; ++k) a_[p * n * n + k] = geo_[p].sqrt_g * geo_[p].g_inv[k];
    valid_[p] = 1;
  });
  parallel_for(N, [&](std::size_t p) {
    interior_[p] = valid_[p] && chart_.boundary_distance(p) >= opt_.margin &&
                   detail::neighborhood_valid(chart_, p, opt_.margin, valid_);
  });
  sampled_mss(chart_, m, f_, df_, a_, valid_, mss_);
  for (std::size_t p = 0; p < N; ++p) mss_.valid[p] = mss_.valid[p] && interior_[p];
  if (!opt_.derivatives) return;

  // Per-node arrays to difference: normals, metric, coordinate h.
  std::vector<double> nu(N * m * len, kNaN), g(N * n * n, kNaN), hc(N * m * n * n, kNaN);
  for (std::size_t p = 0; p < N; ++p) {
    if (!valid_[p]) continue;
    std::copy(geo_[p].frames.normal.begin(), geo_[p].frames.normal.end(), nu.begin() + p * m * len);
    std::copy(geo_[p].g.begin(), geo_[p].g.end(), g.begin() + p * n * n);
    std::copy(geo_[p].h_coord.begin(), geo_[p].h_coord.end(), hc.begin() + p * m * n * n);
  }
  std::vector<double> dnu;
  std::vector<std::uint8_t> ok_nu;
  detail::grid_gradient(chart_, m * len, nu, valid_, 2, dnu, ok_nu);
  // omega_{kab} = (<d_k nu_a, nu_b> - <d_k nu_b, nu_a>) / 2
  parallel_for(N, [&](std::size_t p) {
    if (!ok_nu[p]) return;
    const double* d = &dnu[p * m * len * n];  // [a*len + c][k]
    const double* v = &nu[p * m * len];
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double s = 0.0;
          for (int c = 0; c < len; ++c) s += d[(a * len + c) * n + k] * v[b * len + c] - d[(b * len + c) * n + k] * v[a * len + c];
          omega_[p * n * m * m + (k * m + a) * m + b] = 0.5 * s;
        }
  });
  std::vector<double> dg, dh, dom;
  std::vector<std::uint8_t> ok_g, ok_h, ok_om;
  detail::grid_gradient(chart_, n * n, g, valid_, 2, dg, ok_g);
  detail::grid_gradient(chart_, m * n * n, hc, valid_, 2, dh, ok_h);
  detail::grid_gradient(chart_, n * m * m, omega_, ok_nu, 2, dom, ok_om);
  parallel_for(N, [&](std::size_t p) {
    if (!interior_[p] || !ok_om[p]) {
      interior_[p] = 0;
      return;
    }
    // Reorder [comp][axis] gradients into the layouts finish_derived expects.
    std::vector<double> dgl(n * n * n), dhl(m * n * n * n), doml(n * n * m * m);
    for (int ij = 0; ij < n * n; ++ij)
      for (int l = 0; l < n; ++l) dgl[l * n * n + ij] = dg[(p * n * n + ij) * n + l];
    for (int c = 0; c < m * n * n; ++c)
      for (int k = 0; k < n; ++k) dhl[c * n + k] = dh[(p * m * n * n + c) * n + k];
    for (int c = 0; c < n * m * m; ++c)
      for (int l = 0; l < n; ++l) doml[l * n * m * m + c] = dom[(p * n * m * m + c) * n + l];
    finish_derived(p, geo_[p].h_coord, dhl, dgl, doml);
  });
  for (std::size_t p = 0; p < N; ++p) mss_.valid[p] = mss_.valid[p] && interior_[p];
}

Taylor GeometryField::series(const std::vector<double>& coeffs, std::size_t node) const {
  Taylor t(TaylorBasis::get(n_, 2), 0.0);
  for (int k = 0; k < coef_len_; ++k) t.coeff(k) = coeffs[node * coef_len_ + k];
  return t;
}

Field GeometryField::scalar(const ScalarExpr& e) const {
  Field out = masked_field(chart_, 1, valid_);
  parallel_for(chart_.size(), [&](std::size_t p) {
    if (!valid_[p]) return;
    out.at(p) = e(Taylor(geo_[p].A_norm2), Taylor(geo_[p].star_omega)).value();
  });
  return out;
}

Field GeometryField::laplacian(const ScalarExpr& e) const {
  const int n = n_;
  Field out = masked_field(chart_, 1, interior_);
  if (opt_.mode == Mode::analytic) {
    if (!opt_.derivatives) throw PreconditionError("GeometryField::laplacian: built without derivative data");
    parallel_for(chart_.size(), [&](std::size_t p) {
      if (!interior_[p]) return;
      Taylor phi = e(series(s_coef_, p), series(w_coef_, p));
      const double* ag = &a_grad_[p * n * n * n];
      const double* a = &a_[p * n * n];
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        double div = 0.0;
        for (int i = 0; i < n; ++i) div += ag[i * n * n + i * n + j];
        s += div * phi.gradient(j);
        for (int i = 0; i < n; ++i) s += a[i * n + j] * phi.hessian(i, j);
      }
      out.at(p) = s / geo_[p].sqrt_g;
    });
    return out;
  }
  Field phi = scalar(e);
  Field lb = laplace_beltrami(phi, *this);
  for (std::size_t p = 0; p < chart_.size(); ++p) {
    out.valid[p] = interior_[p] && lb.valid[p];
    out.at(p) = lb.at(p);
  }
  return out;
}

Field GeometryField::gradient_norm2(const ScalarExpr& e) const {
  const int n = n_;
  Field out = masked_field(chart_, 1, interior_);
  auto contract = [&](std::size_t p, const double* grad) {
    const std::vector<double>& gi = geo_[p].g_inv;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += gi[i * n + j] * grad[i] * grad[j];
    return s;
  };
  if (opt_.mode == Mode::analytic) {
    if (!opt_.derivatives) throw PreconditionError("GeometryField::gradient_norm2: built without derivative data");
    parallel_for(chart_.size(), [&](std::size_t p) {
      if (!interior_[p]) return;
      Taylor phi = e(series(s_coef_, p), series(w_coef_, p));
      std::vector<double> grad(n);
      for (int i = 0; i < n; ++i) grad[i] = phi.gradient(i);
      out.at(p) = contract(p, grad.data());
    });
    return out;
  }
  Field phi = scalar(e);
  std::vector<double> grad;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart_, 1, phi.values, phi.valid, 2, grad, ok);
  parallel_for(chart_.size(), [&](std::size_t p) {
    if (!interior_[p] || !ok[p]) {
      out.valid[p] = 0;
      return;
    }
    out.at(p) = contract(p, &grad[p * n]);
  });
  return out;
}

ScalarExpr expr_A_norm2() {
  return [](const Taylor& s, const Taylor&) { return s; };
}

ScalarExpr expr_star_omega() {
  return [](const Taylor&, const Taylor& w) { return w; };
}

Field differentiate(const Field& field, int axis, int order) {
  const GridChart& chart = field.chart;
  if (axis < 0 || axis >= chart.dim()) throw InvalidInput("differentiate: axis out of range");
  if (order != 2 && order != 4) throw InvalidInput("differentiate: order must be 2 or 4");
  const int comps = field.components;
  Field out(chart, comps, kNaN);
  if (field.exact_derivative) {
    out.valid = field.valid;
    parallel_for(chart.size(), [&](std::size_t p) {
      if (!field.valid[p]) return;
      for (int c = 0; c < comps; ++c) out.at(p, c) = field.exact_derivative(p, c, axis);
    });
    return out;
  }
  std::vector<std::uint8_t> fits(chart.size(), 1);
  parallel_for(chart.size(), [&](std::size_t p) {
    Stencil s;
    if (!detail::first_derivative_stencil(chart, p, axis, order, s)) {
      fits[p] = 0;
      out.valid[p] = 0;
      return;
    }
    out.valid[p] = field.valid[p] && detail::stencil_valid(s, field.valid);
    if (out.valid[p]) detail::apply_stencil(s, field.values.data(), comps, &out.values[p * comps]);
  });
  if (std::find(fits.begin(), fits.end(), 0) != fits.end()) throw CoverageError("differentiate: the axis is too short for the stencil", 0.0);
  return out;
}

Field laplace_beltrami(const Field& u, const GeometryField& geometry) {
  const GridChart& chart = geometry.chart();
  if (!(u.chart == chart) || u.components != 1) throw InvalidInput("laplace_beltrami: u must be a scalar field on the geometry's chart");
  const int n = chart.dim();
  std::vector<std::uint8_t> both(chart.size());
  for (std::size_t p = 0; p < chart.size(); ++p) both[p] = u.valid[p] && geometry.valid(p);
  std::vector<double> grad;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, 1, u.values, both, 2, grad, ok);
  std::vector<double> a(chart.size() * n * n, kNaN);
  for (std::size_t p = 0; p < chart.size(); ++p)
    if (both[p]) {
      auto fl = geometry.flux(p);
      std::copy(fl.begin(), fl.end(), a.begin() + p * n * n);
    }
  Field out(chart, 1, kNaN);
  parallel_for(chart.size(), [&](std::size_t p) {
    out.valid[p] = chart.boundary_distance(p) >= 1 && detail::neighborhood_valid(chart, p, 1, both);
    if (!out.valid[p]) return;
    out.at(p) = detail::compact_divergence(chart, p, a.data(), u.values.data(), 1, 0, grad.data()) / geometry.at(p).sqrt_g;
  });
  return out;
}

namespace {

void require_derivatives(const GeometryField& g, const char* what) {
  if (!g.has_derivatives()) throw PreconditionError(std::string(what) + ": geometry was built without derivative data");
}

Field copy_interior(const GeometryField& geo, int comps, const std::function<std::span<const double>(std::size_t)>& get) {
  Field out = masked_field(geo.chart(), comps, geo.interior_mask());
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (!out.valid[p]) continue;
    auto v = get(p);
    std::copy(v.begin(), v.end(), out.values.begin() + p * comps);
  }
  return out;
}

}  // namespace

Field christoffel_symbols(const GeometryField& geometry) {
  require_derivatives(geometry, "christoffel_symbols");
  const int n = geometry.n();
  return copy_interior(geometry, n * n * n, [&](std::size_t p) { return geometry.christoffel(p); });
}

Field normal_connection(const GeometryField& geometry) {
  require_derivatives(geometry, "normal_connection");
  const int n = geometry.n(), m = geometry.m();
  return copy_interior(geometry, n * m * m, [&](std::size_t p) { return geometry.omega_frame(p); });
}

CovariantDerivativeA covariant_derivative_A(const GeometryField& geometry) {
  require_derivatives(geometry, "covariant_derivative_A");
  const int n = geometry.n(), m = geometry.m();
  CovariantDerivativeA out;
  out.grad_h = copy_interior(geometry, m * n * n * n, [&](std::size_t p) { return geometry.grad_h(p); });
  out.grad_A_norm2 = masked_field(geometry.chart(), 1, geometry.interior_mask());
  Field ds = geometry.gradient_norm2(expr_A_norm2());
  out.grad_abs_A2 = masked_field(geometry.chart(), 1, geometry.interior_mask());
  for (std::size_t p = 0; p < geometry.chart().size(); ++p) {
    if (!geometry.interior(p)) continue;
    out.grad_A_norm2.at(p) = geometry.grad_A_norm2(p);
    const double s = geometry.at(p).A_norm2;
    out.grad_abs_A2.valid[p] = ds.valid[p];
    out.grad_abs_A2.at(p) = s > 0.0 ? ds.at(p) / (4.0 * s) : 0.0;
  }
  return out;
}

Field connection_curvature_defect(const GeometryField& geometry) {
  require_derivatives(geometry, "connection_curvature_defect");
  Field out = masked_field(geometry.chart(), 1, geometry.interior_mask());
  for (std::size_t p = 0; p < geometry.chart().size(); ++p) {
    if (!geometry.interior(p)) continue;
    auto c = geometry.connection_curvature(p);
    const auto& r = geometry.at(p).R_perp;
    double d = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) d = std::max(d, std::abs(c[k] - r[k]));
    out.at(p) = d;
  }
  return out;
}

double ball_coverage(const GeometryField& geometry, double radius) {
  const GridChart& chart = geometry.chart();
  const double r2 = radius * radius;
  bool touches = false;
  for (std::size_t p = 0; p < chart.size() && !touches; ++p)
    touches = chart.is_boundary(p) && geometry.valid(p) && geometry.ambient_radius2(p) <= r2;
  if (!touches) return 1.0;
  // Fraction of the domain ball |x| <= R inside the chart box, on a lattice.
  const int n = chart.dim();
  const int k = n <= 2 ? 64 : n == 3 ? 32 : 20;
  std::vector<int> idx(n, 0);
  std::size_t total = 0, inside = 0;
  while (true) {
    double d2 = 0.0;
    bool in_box = true;
    for (int a = 0; a < n; ++a) {
      double x = -radius + (idx[a] + 0.5) * (2.0 * radius / k);
      d2 += x * x;
      in_box = in_box && x >= chart.lo()[a] && x <= chart.hi()[a];
    }
    if (d2 <= r2) {
      ++total;
      inside += in_box;
    }
    int a = n - 1;
    while (a >= 0 && idx[a] == k - 1) idx[a--] = 0;
    if (a < 0) break;
    ++idx[a];
  }
  return total ? static_cast<double>(inside) / total : 1.0;
}

BallIntegral integrate_ball(const Field& integrand, const GeometryField& geometry, double radius,
                            const BallOptions& options) {
  if (!(radius > 0.0)) throw InvalidInput("integrate_ball: radius must be positive");
  if (!(integrand.chart == geometry.chart()) || integrand.components != 1)
    throw InvalidInput("integrate_ball: integrand must be a scalar field on the geometry's chart");
  BallIntegral out;
  out.coverage = ball_coverage(geometry, radius);
  if (out.coverage < options.min_coverage)
    throw CoverageError("integrate_ball: the ball of radius " + std::to_string(radius) + " is only " +
                            std::to_string(100.0 * out.coverage) + "% inside the chart",
                        out.coverage);
  const double r2 = radius * radius, i2 = options.inner_radius * options.inner_radius;
  const double cell = geometry.chart().cell_volume();
  std::vector<double> terms;
  for (std::size_t p = 0; p < geometry.chart().size(); ++p) {
    if (!geometry.valid(p) || !integrand.valid[p]) continue;
    const double d2 = geometry.ambient_radius2(p);
    if (d2 > r2 || d2 < i2) continue;
    terms.push_back(integrand.at(p) * geometry.at(p).sqrt_g * cell);
  }
  out.nodes = terms.size();
  out.value = pairwise_sum(terms);
  if (terms.empty()) out.warning = "no grid node lies inside the ball";
  return out;
}

double integrate(const Field& integrand, const GeometryField& geometry) {
  if (!(integrand.chart == geometry.chart()) || integrand.components != 1)
    throw InvalidInput("integrate: integrand must be a scalar field on the geometry's chart");
  const double cell = geometry.chart().cell_volume();
  std::vector<double> terms;
  for (std::size_t p = 0; p < geometry.chart().size(); ++p)
    if (geometry.valid(p) && integrand.valid[p]) terms.push_back(integrand.at(p) * geometry.at(p).sqrt_g * cell);
  return pairwise_sum(terms);
}

Field mss_residual(const GraphMap& map, const GridChart& chart, Mode mode) {
  if (chart.dim() != map.domain_dim()) throw InvalidInput("mss_residual: chart dimension does not match the map");
  const int n = chart.dim(), m = map.codim();
  Field out(chart, m, kNaN);
  if (mode == Mode::analytic) {
    if (!map.analytic()) throw PreconditionError("mss_residual: analytic mode needs an analytic map");
    parallel_for(chart.size(), [&](std::size_t p) {
      out.valid[p] = 0;
      std::vector<double> x = chart.point(p);
      if (!map.in_domain(x)) return;
      JetAtPoint jet = map.jet(x, 2);
      exact_mss(n, m, jet.df.data(), jet.d2f.data(), &out.values[p * m]);
      out.valid[p] = 1;
    });
    return out;
  }
  Field vals = sample_values(map, chart);
  std::vector<double> P;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, m, vals.values, vals.valid, 2, P, ok);
  std::vector<double> a(chart.size() * n * n, kNaN);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!ok[p]) return;
    std::vector<double> g_inv(n * n);
    double sg;
    detail::flux_coefficients(n, m, &P[p * m * n], &a[p * n * n], g_inv.data(), &sg);
  });
  sampled_mss(chart, m, vals.values, P, a, ok, out);
  return out;
}

}  // namespace mingraph
