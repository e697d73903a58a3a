#include "oracle/mna.hpp"

#include <cmath>
#include <stdexcept>

namespace klon::oracle {

using circuit::PartKind;

MnaSim::MnaSim(const circuit::Netlist& netlist, double fs) : fs_(fs), netlist_(netlist) {
  for (const auto& p : netlist_.parts) {
    for (const auto& n : p.nodes) node_index(n);
  }
  n_nodes_ = static_cast<int>(nodes_.size());
  int extra = n_nodes_;
  for (std::size_t k = 0; k < netlist_.parts.size(); ++k) {
    const auto& p = netlist_.parts[k];
    Stamp s;
    s.kind = p.kind;
    s.value = p.value;
    for (std::size_t j = 0; j < p.nodes.size(); ++j) s.n[j] = node_index(p.nodes[j]);
    if (p.kind == PartKind::voltage_source || p.kind == PartKind::opamp) s.extra = extra++;
    if (p.kind == PartKind::diode_pair) {
      if (diode_ >= 0) throw std::invalid_argument("oracle supports one diode pair");
      diode_ = static_cast<int>(k);
    }
    part_index_[p.name] = k;
    stamps_.push_back(s);
  }
  n_unknowns_ = extra;
  reset();
}

int MnaSim::node_index(const std::string& name) {
  if (name == "0") return -1;
  auto it = nodes_.find(name);
  if (it != nodes_.end()) return it->second;
  const int idx = static_cast<int>(nodes_.size());
  nodes_[name] = idx;
  return idx;
}

void MnaSim::reset() {
  x_ = Eigen::VectorXd::Zero(n_unknowns_);
  cap_v_.assign(stamps_.size(), 0.0);
  cap_i_.assign(stamps_.size(), 0.0);
  current_.assign(stamps_.size(), 0.0);
  vd_ = 0.0;
}

void MnaSim::solve_linear(double vin, double gd, double ieq, Eigen::VectorXd& x) const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_unknowns_, n_unknowns_);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknowns_);

  auto conductance = [&](int a, int b, double g) {
    if (a >= 0) A(a, a) += g;
    if (b >= 0) A(b, b) += g;
    if (a >= 0 && b >= 0) {
      A(a, b) -= g;
      A(b, a) -= g;
    }
  };
  // Current `j` flowing a -> b through the element (leaving a).
  auto current_source = [&](int a, int b, double j) {
    if (a >= 0) rhs[a] -= j;
    if (b >= 0) rhs[b] += j;
  };

  for (std::size_t k = 0; k < stamps_.size(); ++k) {
    const Stamp& s = stamps_[k];
    switch (s.kind) {
      case PartKind::resistor:
        conductance(s.n[0], s.n[1], 1.0 / s.value);
        break;
      case PartKind::capacitor: {
        const double gc = 2.0 * s.value * fs_;
        conductance(s.n[0], s.n[1], gc);
        current_source(s.n[0], s.n[1], -(gc * cap_v_[k] + cap_i_[k]));
        break;
      }
      case PartKind::diode_pair:
        conductance(s.n[0], s.n[1], gd);
        current_source(s.n[0], s.n[1], ieq);
        break;
      case PartKind::voltage_source:
        if (s.n[0] >= 0) {
          A(s.n[0], s.extra) += 1.0;
          A(s.extra, s.n[0]) += 1.0;
        }
        if (s.n[1] >= 0) {
          A(s.n[1], s.extra) -= 1.0;
          A(s.extra, s.n[1]) -= 1.0;
        }
        rhs[s.extra] = vin;
        break;
      case PartKind::opamp:
        // Output current injected into the output node; constraint v+ = v-.
        if (s.n[2] >= 0) A(s.n[2], s.extra) -= 1.0;
        if (s.n[0] >= 0) A(s.extra, s.n[0]) += 1.0;
        if (s.n[1] >= 0) A(s.extra, s.n[1]) -= 1.0;
        break;
    }
  }
  x = A.partialPivLu().solve(rhs);
}

void MnaSim::step(double vin) {
  Eigen::VectorXd x;
  last_iterations_ = 0;
  if (diode_ < 0) {
    solve_linear(vin, 0.0, 0.0, x);
  } else {
    const auto& d = netlist_.diode;
    const double nvt = d.n * d.Vt;
    const Stamp& s = stamps_[static_cast<std::size_t>(diode_)];
    double v0 = vd_;
    for (int it = 0; it < 200; ++it) {
      const double ep = std::exp(v0 / nvt), em = std::exp(-v0 / nvt);
      const double id = d.Is * (ep - em);
      const double gd = d.Is * (ep + em) / nvt;
      solve_linear(vin, gd, id - gd * v0, x);
      ++last_iterations_;
      const double v1 = node_v(x, s.n[0]) - node_v(x, s.n[1]);
      double dv = v1 - v0;
      if (std::abs(dv) > 0.1) dv = dv > 0 ? 0.1 : -0.1;
      v0 += dv;
      if (std::abs(dv) < 1e-14 + 1e-13 * std::abs(v0)) break;
    }
    // Final solve at the converged operating point.
    const double ep = std::exp(v0 / nvt), em = std::exp(-v0 / nvt);
    const double gd = d.Is * (ep + em) / nvt;
    solve_linear(vin, gd, d.Is * (ep - em) - gd * v0, x);
    vd_ = node_v(x, s.n[0]) - node_v(x, s.n[1]);
  }
  x_ = x;

  for (std::size_t k = 0; k < stamps_.size(); ++k) {
    const Stamp& s = stamps_[k];
    const double vab = node_v(x_, s.n[0]) - node_v(x_, s.n[1]);
    switch (s.kind) {
      case PartKind::resistor:
        current_[k] = vab / s.value;
        break;
      case PartKind::capacitor: {
        const double gc = 2.0 * s.value * fs_;
        current_[k] = gc * vab - (gc * cap_v_[k] + cap_i_[k]);
        cap_v_[k] = vab;
        cap_i_[k] = current_[k];
        break;
      }
      case PartKind::diode_pair: {
        const auto& d = netlist_.diode;
        current_[k] = d.Is * (std::exp(vab / (d.n * d.Vt)) - std::exp(-vab / (d.n * d.Vt)));
        break;
      }
      case PartKind::voltage_source:
      case PartKind::opamp:
        current_[k] = x_[s.extra];
        break;
    }
  }
}

double MnaSim::v(const std::string& node) const {
  if (node == "0") return 0.0;
  return x_[nodes_.at(node)];
}

double MnaSim::i(const std::string& part) const { return current_[part_index_.at(part)]; }

}  // namespace klon::oracle
