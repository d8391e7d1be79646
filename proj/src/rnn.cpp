#include <cmath>

#include "timeagg/errors.hpp"
#include "timeagg/nn.hpp"

// GRU and LSTM forward passes plus full backpropagation through time.
// Gate derivatives use the cached post-activations: d sigmoid = s(1-s),
// d tanh = 1 - g^2.

namespace timeagg::nn {

namespace {

Matrix sigmoid_of(const Matrix& z) { return sigmoid(z); }

Matrix tanh_of(const Matrix& z) { return z.array().tanh().matrix(); }

Matrix colsum(const Matrix& m) { return m.colwise().sum(); }

}  // namespace

// ---------------------------------------------------------------------------
// GRU

Gru::Gru(std::string name, int in, int units)
    : wz(Matrix::Zero(in, units)), wr(Matrix::Zero(in, units)), wh(Matrix::Zero(in, units)),
      uz(Matrix::Zero(units, units)), ur(Matrix::Zero(units, units)), uh(Matrix::Zero(units, units)),
      bz(Matrix::Zero(1, units)), br(Matrix::Zero(1, units)), bh(Matrix::Zero(1, units)),
      gwz(Matrix::Zero(in, units)), gwr(Matrix::Zero(in, units)), gwh(Matrix::Zero(in, units)),
      guz(Matrix::Zero(units, units)), gur(Matrix::Zero(units, units)), guh(Matrix::Zero(units, units)),
      gbz(Matrix::Zero(1, units)), gbr(Matrix::Zero(1, units)), gbh(Matrix::Zero(1, units)),
      name_(std::move(name)), in_(in), units_(units) {}

Value Gru::forward(const Value& x, Mode, Rng*) {
  const Sequence& in = x.seq();
  const int steps = static_cast<int>(in.size());
  if (steps == 0) throw DataError(name_ + ": empty sequence");
  const long n = in[0].rows();
  x_ = in;
  h_prev_.assign(steps, Matrix());
  z_.assign(steps, Matrix());
  r_.assign(steps, Matrix());
  g_.assign(steps, Matrix());
  rh_.assign(steps, Matrix());

  Matrix h = Matrix::Zero(n, units_);
  for (int t = 0; t < steps; ++t) {
    if (in[t].cols() != in_) throw DataError(name_ + ": input width mismatch");
    h_prev_[t] = h;
    Matrix az = in[t] * wz + h * uz;
    az.rowwise() += bz.row(0);
    Matrix ar = in[t] * wr + h * ur;
    ar.rowwise() += br.row(0);
    z_[t] = sigmoid_of(az);
    r_[t] = sigmoid_of(ar);
    rh_[t] = r_[t].cwiseProduct(h);
    Matrix ah = in[t] * wh + rh_[t] * uh;
    ah.rowwise() += bh.row(0);
    g_[t] = tanh_of(ah);
    h = (1.0 - z_[t].array()) * h.array() + z_[t].array() * g_[t].array();
  }
  return h;
}

Value Gru::backward(const Value& grad_out) {
  const int steps = static_cast<int>(x_.size());
  Sequence dx(steps);
  Matrix dh = grad_out.mat();
  for (int t = steps - 1; t >= 0; --t) {
    const Matrix& z = z_[t];
    const Matrix& r = r_[t];
    const Matrix& g = g_[t];
    const Matrix& hp = h_prev_[t];

    const Matrix daz =
        (dh.array() * (g.array() - hp.array()) * z.array() * (1.0 - z.array())).matrix();
    const Matrix dah =
        (dh.array() * z.array() * (1.0 - g.array() * g.array())).matrix();
    Matrix dhp = (dh.array() * (1.0 - z.array())).matrix();

    const Matrix drh = dah * uh.transpose();
    const Matrix dar =
        (drh.array() * hp.array() * r.array() * (1.0 - r.array())).matrix();
    dhp += drh.cwiseProduct(r);
    dhp += daz * uz.transpose() + dar * ur.transpose();

    dx[t] = daz * wz.transpose() + dar * wr.transpose() + dah * wh.transpose();

    gwz.noalias() += x_[t].transpose() * daz;
    guz.noalias() += hp.transpose() * daz;
    gbz += colsum(daz);
    gwr.noalias() += x_[t].transpose() * dar;
    gur.noalias() += hp.transpose() * dar;
    gbr += colsum(dar);
    gwh.noalias() += x_[t].transpose() * dah;
    guh.noalias() += rh_[t].transpose() * dah;
    gbh += colsum(dah);

    dh = dhp;
  }
  return dx;
}

void Gru::init(Rng& rng) {
  glorot_uniform(wz, in_, units_, rng);
  glorot_uniform(wr, in_, units_, rng);
  glorot_uniform(wh, in_, units_, rng);
  orthogonal(uz, rng);
  orthogonal(ur, rng);
  orthogonal(uh, rng);
  bz.setZero();
  br.setZero();
  bh.setZero();
}

void Gru::collect_params(std::vector<ParamRef>& out) {
  out.push_back({name_ + "/Wz", &wz, &gwz, true});
  out.push_back({name_ + "/Wr", &wr, &gwr, true});
  out.push_back({name_ + "/Wh", &wh, &gwh, true});
  out.push_back({name_ + "/Uz", &uz, &guz, true});
  out.push_back({name_ + "/Ur", &ur, &gur, true});
  out.push_back({name_ + "/Uh", &uh, &guh, true});
  out.push_back({name_ + "/bz", &bz, &gbz, false});
  out.push_back({name_ + "/br", &br, &gbr, false});
  out.push_back({name_ + "/bh", &bh, &gbh, false});
}

long Gru::param_count() const {
  return 3L * (static_cast<long>(in_) * units_ + static_cast<long>(units_) * units_ + units_);
}

std::string Gru::describe() const {
  return "gru(" + std::to_string(in_) + "->" + std::to_string(units_) + ")";
}

// ---------------------------------------------------------------------------
// LSTM

Lstm::Lstm(std::string name, int in, int units)
    : wi(Matrix::Zero(in, units)), wf(Matrix::Zero(in, units)),
      wg(Matrix::Zero(in, units)), wo(Matrix::Zero(in, units)),
      ui(Matrix::Zero(units, units)), uf(Matrix::Zero(units, units)),
      ug(Matrix::Zero(units, units)), uo(Matrix::Zero(units, units)),
      bi(Matrix::Zero(1, units)), bf(Matrix::Zero(1, units)),
      bg(Matrix::Zero(1, units)), bo(Matrix::Zero(1, units)),
      gwi(Matrix::Zero(in, units)), gwf(Matrix::Zero(in, units)),
      gwg(Matrix::Zero(in, units)), gwo(Matrix::Zero(in, units)),
      gui(Matrix::Zero(units, units)), guf(Matrix::Zero(units, units)),
      gug(Matrix::Zero(units, units)), guo(Matrix::Zero(units, units)),
      gbi(Matrix::Zero(1, units)), gbf(Matrix::Zero(1, units)),
      gbg(Matrix::Zero(1, units)), gbo(Matrix::Zero(1, units)),
      name_(std::move(name)), in_(in), units_(units) {}

Value Lstm::forward(const Value& x, Mode, Rng*) {
  const Sequence& in = x.seq();
  const int steps = static_cast<int>(in.size());
  if (steps == 0) throw DataError(name_ + ": empty sequence");
  const long n = in[0].rows();
  x_ = in;
  h_prev_.assign(steps, Matrix());
  c_prev_.assign(steps, Matrix());
  i_.assign(steps, Matrix());
  f_.assign(steps, Matrix());
  g_.assign(steps, Matrix());
  o_.assign(steps, Matrix());
  c_.assign(steps, Matrix());
  tanh_c_.assign(steps, Matrix());

  Matrix h = Matrix::Zero(n, units_);
  Matrix c = Matrix::Zero(n, units_);
  for (int t = 0; t < steps; ++t) {
    if (in[t].cols() != in_) throw DataError(name_ + ": input width mismatch");
    h_prev_[t] = h;
    c_prev_[t] = c;
    Matrix ai = in[t] * wi + h * ui;
    ai.rowwise() += bi.row(0);
    Matrix af = in[t] * wf + h * uf;
    af.rowwise() += bf.row(0);
    Matrix ag = in[t] * wg + h * ug;
    ag.rowwise() += bg.row(0);
    Matrix ao = in[t] * wo + h * uo;
    ao.rowwise() += bo.row(0);
    i_[t] = sigmoid_of(ai);
    f_[t] = sigmoid_of(af);
    g_[t] = tanh_of(ag);
    o_[t] = sigmoid_of(ao);
    c = f_[t].cwiseProduct(c) + i_[t].cwiseProduct(g_[t]);
    c_[t] = c;
    tanh_c_[t] = tanh_of(c);
    h = o_[t].cwiseProduct(tanh_c_[t]);
  }
  return h;
}

Value Lstm::backward(const Value& grad_out) {
  const int steps = static_cast<int>(x_.size());
  Sequence dx(steps);
  Matrix dh = grad_out.mat();
  Matrix dc = Matrix::Zero(dh.rows(), dh.cols());
  for (int t = steps - 1; t >= 0; --t) {
    const Matrix& i = i_[t];
    const Matrix& f = f_[t];
    const Matrix& g = g_[t];
    const Matrix& o = o_[t];
    const Matrix& tc = tanh_c_[t];

    const Matrix dao =
        (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();
    dc.array() += dh.array() * o.array() * (1.0 - tc.array() * tc.array());
    const Matrix dai =
        (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    const Matrix daf =
        (dc.array() * c_prev_[t].array() * f.array() * (1.0 - f.array())).matrix();
    const Matrix dag =
        (dc.array() * i.array() * (1.0 - g.array() * g.array())).matrix();

    dx[t] = dai * wi.transpose() + daf * wf.transpose() + dag * wg.transpose() +
            dao * wo.transpose();

    gwi.noalias() += x_[t].transpose() * dai;
    gui.noalias() += h_prev_[t].transpose() * dai;
    gbi += colsum(dai);
    gwf.noalias() += x_[t].transpose() * daf;
    guf.noalias() += h_prev_[t].transpose() * daf;
    gbf += colsum(daf);
    gwg.noalias() += x_[t].transpose() * dag;
    gug.noalias() += h_prev_[t].transpose() * dag;
    gbg += colsum(dag);
    gwo.noalias() += x_[t].transpose() * dao;
    guo.noalias() += h_prev_[t].transpose() * dao;
    gbo += colsum(dao);

    dh = dai * ui.transpose() + daf * uf.transpose() + dag * ug.transpose() +
         dao * uo.transpose();
    dc = dc.cwiseProduct(f);
  }
  return dx;
}

void Lstm::init(Rng& rng) {
  glorot_uniform(wi, in_, units_, rng);
  glorot_uniform(wf, in_, units_, rng);
  glorot_uniform(wg, in_, units_, rng);
  glorot_uniform(wo, in_, units_, rng);
  orthogonal(ui, rng);
  orthogonal(uf, rng);
  orthogonal(ug, rng);
  orthogonal(uo, rng);
  bi.setZero();
  bf.setOnes();  // forget gate open at the start of training
  bg.setZero();
  bo.setZero();
}

void Lstm::collect_params(std::vector<ParamRef>& out) {
  out.push_back({name_ + "/Wi", &wi, &gwi, true});
  out.push_back({name_ + "/Wf", &wf, &gwf, true});
  out.push_back({name_ + "/Wg", &wg, &gwg, true});
  out.push_back({name_ + "/Wo", &wo, &gwo, true});
  out.push_back({name_ + "/Ui", &ui, &gui, true});
  out.push_back({name_ + "/Uf", &uf, &guf, true});
  out.push_back({name_ + "/Ug", &ug, &gug, true});
  out.push_back({name_ + "/Uo", &uo, &guo, true});
  out.push_back({name_ + "/bi", &bi, &gbi, false});
  out.push_back({name_ + "/bf", &bf, &gbf, false});
  out.push_back({name_ + "/bg", &bg, &gbg, false});
  out.push_back({name_ + "/bo", &bo, &gbo, false});
}

long Lstm::param_count() const {
  return 4L * (static_cast<long>(in_) * units_ + static_cast<long>(units_) * units_ + units_);
}

std::string Lstm::describe() const {
  return "lstm(" + std::to_string(in_) + "->" + std::to_string(units_) + ")";
}

}  // namespace timeagg::nn
