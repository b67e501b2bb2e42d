// SPDX-License-Identifier: Apache-2.0
#include "dishft/stgnn/gru.hpp"

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "dishft/error.hpp"

namespace dishft::stgnn {

namespace nd = ndgrad;

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using StepMap = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;
using StepGradMap = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
using RowVecMap = Eigen::Map<const Eigen::RowVectorXd>;

struct Trace {
  std::vector<Mat> h;    // h[0] = 0, h[l + 1] after step l
  std::vector<Mat> z, r, n, a_hn;
};

ConstMatMap as_matrix(const nd::Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1))};
}

MatMap as_matrix(nd::Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1))};
}

RowVecMap as_row(const nd::Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.size())}; }

Mat sigmoid(const Mat& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

// tanh(x) = 2 sigmoid(2x) - 1; the exp path vectorises, std::tanh does not.
Mat fast_tanh(const Mat& a) { return (2.0 * (1.0 + (-2.0 * a.array()).exp()).inverse() - 1.0).matrix(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("gru_sequence: " + what);
}

}  // namespace

nd::Var gru_sequence(const nd::Var& history, const GruWeights& w) {
  const nd::Shape& s = history.shape();
  require(s.size() == 3 && s[1] >= 1, "history must be [N x L x M] with L >= 1, got " + nd::to_string(s));
  const auto n_stocks = static_cast<Eigen::Index>(s[0]);
  const auto steps = static_cast<Eigen::Index>(s[1]);
  const auto m = static_cast<Eigen::Index>(s[2]);
  const nd::Shape& sh = w.w_hz.shape();
  require(sh.size() == 2 && sh[0] == sh[1], "W_hz must be square, got " + nd::to_string(sh));
  const auto d = static_cast<Eigen::Index>(sh[0]);
  for (const nd::Var* x : {&w.w_xz, &w.w_xr, &w.w_xn}) {
    require(x->shape() == nd::Shape{s[2], sh[0]}, "input weight shape " + nd::to_string(x->shape()));
  }
  for (const nd::Var* x : {&w.w_hr, &w.w_hn}) {
    require(x->shape() == sh, "hidden weight shape " + nd::to_string(x->shape()));
  }
  for (const nd::Var* x : {&w.b_z, &w.b_r, &w.b_xn, &w.b_hn}) {
    require(x->shape() == nd::Shape{sh[0]}, "bias shape " + nd::to_string(x->shape()));
  }

  // Step l of every stock: rows strided by L * M.
  auto step_input = [m, steps, n_stocks](const double* base, Eigen::Index l) {
    return StepMap(base + l * m, n_stocks, m, Eigen::OuterStride<>(steps * m));
  };

  auto trace = std::make_shared<Trace>();
  trace->h.push_back(Mat::Zero(n_stocks, d));
  const ConstMatMap wxz = as_matrix(w.w_xz.value()), wxr = as_matrix(w.w_xr.value()),
                    wxn = as_matrix(w.w_xn.value());
  const ConstMatMap whz = as_matrix(w.w_hz.value()), whr = as_matrix(w.w_hr.value()),
                    whn = as_matrix(w.w_hn.value());
  const RowVecMap bz = as_row(w.b_z.value()), br = as_row(w.b_r.value()), bxn = as_row(w.b_xn.value()),
                  bhn = as_row(w.b_hn.value());
  for (Eigen::Index l = 0; l < steps; ++l) {
    const StepMap xl = step_input(history.value().data(), l);
    const Mat& h = trace->h.back();
    Mat az = xl * wxz + h * whz;
    az.rowwise() += bz;
    Mat ar = xl * wxr + h * whr;
    ar.rowwise() += br;
    Mat a_hn = h * whn;
    a_hn.rowwise() += bhn;
    Mat z = sigmoid(az), r = sigmoid(ar);
    Mat pre = xl * wxn;
    pre.rowwise() += bxn;
    Mat n = fast_tanh((pre.array() + r.array() * a_hn.array()).matrix());
    trace->h.push_back(n + (z.array() * (h - n).array()).matrix());
    trace->z.push_back(std::move(z));
    trace->r.push_back(std::move(r));
    trace->n.push_back(std::move(n));
    trace->a_hn.push_back(std::move(a_hn));
  }

  nd::Tensor out({s[0], sh[0]});
  as_matrix(out) = trace->h.back();

  std::vector<nd::Var> parents{history, w.w_xz, w.w_xr, w.w_xn, w.w_hz, w.w_hr, w.w_hn,
                               w.b_z,   w.b_r,  w.b_xn, w.b_hn};
  return history.tape().record(
      "gru_sequence", std::move(out), std::move(parents),
      [trace, n_stocks, steps, m, d, step_input](const nd::BackwardContext& ctx) {
        const auto& pv = ctx.parent_values;
        const auto& pg = ctx.parent_grads;
        const ConstMatMap wxz = as_matrix(*pv[1]), wxr = as_matrix(*pv[2]), wxn = as_matrix(*pv[3]);
        const ConstMatMap whz = as_matrix(*pv[4]), whr = as_matrix(*pv[5]), whn = as_matrix(*pv[6]);
        Mat dh = as_matrix(ctx.out_grad);
        for (Eigen::Index l = steps; l-- > 0;) {
          const Mat& h_prev = trace->h[l];
          const auto z = trace->z[l].array();
          const auto r = trace->r[l].array();
          const auto n = trace->n[l].array();
          const Mat dn_pre = (dh.array() * (1.0 - z) * (1.0 - n * n)).matrix();
          const Mat dz_pre = (dh.array() * (h_prev.array() - n) * z * (1.0 - z)).matrix();
          const Mat dr_pre = (dn_pre.array() * trace->a_hn[l].array() * r * (1.0 - r)).matrix();
          const Mat da_hn = (dn_pre.array() * r).matrix();
          const StepMap xl = step_input(pv[0]->data(), l);

          if (pg[0]) {
            StepGradMap dx(pg[0]->data() + l * m, n_stocks, m, Eigen::OuterStride<>(steps * m));
            dx.noalias() += dz_pre * wxz.transpose();
            dx.noalias() += dr_pre * wxr.transpose();
            dx.noalias() += dn_pre * wxn.transpose();
          }
          if (pg[1]) as_matrix(*pg[1]).noalias() += xl.transpose() * dz_pre;
          if (pg[2]) as_matrix(*pg[2]).noalias() += xl.transpose() * dr_pre;
          if (pg[3]) as_matrix(*pg[3]).noalias() += xl.transpose() * dn_pre;
          if (pg[4]) as_matrix(*pg[4]).noalias() += h_prev.transpose() * dz_pre;
          if (pg[5]) as_matrix(*pg[5]).noalias() += h_prev.transpose() * dr_pre;
          if (pg[6]) as_matrix(*pg[6]).noalias() += h_prev.transpose() * da_hn;
          auto add_colsum = [d](nd::Tensor* g, const Mat& src) {
            if (g) Eigen::Map<Eigen::RowVectorXd>(g->data(), d) += src.colwise().sum();
          };
          add_colsum(pg[7], dz_pre);
          add_colsum(pg[8], dr_pre);
          add_colsum(pg[9], dn_pre);
          add_colsum(pg[10], da_hn);

          Mat dh_prev = (dh.array() * z).matrix();
          dh_prev.noalias() += dz_pre * whz.transpose();
          dh_prev.noalias() += dr_pre * whr.transpose();
          dh_prev.noalias() += da_hn * whn.transpose();
          dh = std::move(dh_prev);
        }
      });
}

}  // namespace dishft::stgnn
