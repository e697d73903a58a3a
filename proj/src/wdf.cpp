#include "klon/wdf.hpp"

#include <cmath>
#include <string>

#include "klon/error.hpp"

namespace klon::wdf {
namespace {

double checked_resistance(double R, std::string_view what) {
  if (!(R > 0.0) || !std::isfinite(R)) throw WdfError(std::string(what) + " must be positive and finite");
  return R;
}

}  // namespace

double Node::reflect_at_root(double a, double port_R) {
  const double ve = reflected();
  const double re = R0_;
  const double i = (a - ve) / (port_R + re);
  const double v = ve + re * i;
  incident(v + re * i);
  return v - port_R * i;
}

void Node::set_port_resistance(double R0) {
  R0_ = R0;
  if (parent_ != nullptr) parent_->adapt();
}

Resistor::Resistor(double R) { R0_ = checked_resistance(R, "resistance"); }

void Resistor::set_resistance(double R) { set_port_resistance(checked_resistance(R, "resistance")); }

Capacitor::Capacitor(double C, double fs) : C_(C), fs_(fs) {
  if (!(C > 0.0) || !(fs > 0.0)) throw WdfError("capacitance and sample rate must be positive");
  R0_ = 1.0 / (2.0 * C_ * fs_);
}

void Capacitor::set_capacitance(double C) {
  if (!(C > 0.0)) throw WdfError("capacitance must be positive");
  C_ = C;
  set_port_resistance(1.0 / (2.0 * C_ * fs_));
}

void Capacitor::set_sample_rate(double fs) {
  if (!(fs > 0.0)) throw WdfError("sample rate must be positive");
  fs_ = fs;
  set_port_resistance(1.0 / (2.0 * C_ * fs_));
}

ResistiveVoltageSource::ResistiveVoltageSource(double R, double Vs) : VoltageSource(Vs) {
  R0_ = checked_resistance(R, "source resistance");
}

void ResistiveVoltageSource::set_resistance(double R) {
  set_port_resistance(checked_resistance(R, "source resistance"));
}

double IdealVoltageSource::reflected() { throw WdfError("ideal voltage source cannot be adapted"); }
void IdealVoltageSource::incident(double) { throw WdfError("ideal voltage source cannot be adapted"); }

double IdealVoltageSource::reflect_at_root(double a, double port_R) {
  R0_ = port_R;
  a_ = a;
  b_ = 2.0 * Vs_ - a;
  return b_;
}

double DiodePair::reflected() { throw WdfError("diode pair cannot be adapted"); }
void DiodePair::incident(double) { throw WdfError("diode pair cannot be adapted"); }

double DiodePair::reflect_at_root(double a, double port_R) {
  R0_ = port_R;
  a_ = a;
  b_ = diode_pair_reflect(a, port_R, params_);
  return b_;
}

Scattering scatter(AdaptorKind kind, std::span<const double> child_R, double a_up,
                   std::span<const double> b_children) {
  Scattering s;
  s.down.resize(child_R.size());
  if (kind == AdaptorKind::series) {
    double r_up = 0.0, sum_b = 0.0;
    for (std::size_t k = 0; k < child_R.size(); ++k) {
      r_up += child_R[k];
      sum_b += b_children[k];
    }
    s.up = -sum_b;
    const double total = a_up + sum_b;
    for (std::size_t k = 0; k < child_R.size(); ++k) s.down[k] = b_children[k] - (child_R[k] / r_up) * total;
  } else {
    double g_up = 0.0;
    for (double r : child_R) g_up += 1.0 / r;
    double up = 0.0;
    for (std::size_t k = 0; k < child_R.size(); ++k) up += (1.0 / child_R[k]) / g_up * b_children[k];
    s.up = up;
    for (std::size_t k = 0; k < child_R.size(); ++k) s.down[k] = a_up + up - b_children[k];
  }
  return s;
}

Adaptor::Adaptor(AdaptorKind kind, std::vector<std::unique_ptr<Node>> children)
    : kind_(kind), children_(std::move(children)) {
  if (children_.size() < 2) throw WdfError("adaptor needs at least two children");
  for (auto& c : children_) {
    if (!c) throw WdfError("adaptor child is null");
    c->parent_ = this;
  }
  gamma_.resize(children_.size());
  b_children_.resize(children_.size());
  adapt();
}

void Adaptor::adapt() {
  ++adapt_count_;
  if (kind_ == AdaptorKind::series) {
    double r = 0.0;
    for (auto& c : children_) r += c->port_resistance();
    for (std::size_t k = 0; k < children_.size(); ++k) gamma_[k] = children_[k]->port_resistance() / r;
    set_port_resistance(r);
  } else {
    double g = 0.0;
    for (auto& c : children_) g += 1.0 / c->port_resistance();
    for (std::size_t k = 0; k < children_.size(); ++k) gamma_[k] = (1.0 / children_[k]->port_resistance()) / g;
    set_port_resistance(1.0 / g);
  }
}

double Adaptor::reflected() {
  double up = 0.0;
  if (kind_ == AdaptorKind::series) {
    for (std::size_t k = 0; k < children_.size(); ++k) up -= (b_children_[k] = children_[k]->reflected());
  } else {
    for (std::size_t k = 0; k < children_.size(); ++k) up += gamma_[k] * (b_children_[k] = children_[k]->reflected());
  }
  return b_ = up;
}

void Adaptor::incident(double a) {
  a_ = a;
  if (kind_ == AdaptorKind::series) {
    const double total = a - b_;  // a + sum b_k, since b_ = -sum b_k
    for (std::size_t k = 0; k < children_.size(); ++k) children_[k]->incident(b_children_[k] - gamma_[k] * total);
  } else {
    for (std::size_t k = 0; k < children_.size(); ++k) children_[k]->incident(a + b_ - b_children_[k]);
  }
}

void Adaptor::reset() {
  a_ = b_ = 0.0;
  for (auto& b : b_children_) b = 0.0;
}

Tree::Tree(std::unique_ptr<Node> root, std::unique_ptr<Node> body)
    : root_(std::move(root)), body_(std::move(body)) {
  if (!root_ || !body_) throw WdfError("tree needs a root and a body");
  collect(*body_, 1);
  for (Node* n : nodes_) {
    if (!n->adaptable()) {
      throw WdfError("unadapted root conflict: '" + std::string(n->kind()) +
                     "' cannot sit below the root ('" + std::string(root_->kind()) + "' is already there)");
    }
  }
  root_->polarity_ = 1;
}

void Tree::collect(Node& n, int polarity) {
  n.polarity_ = polarity;
  nodes_.push_back(&n);
  if (auto* ad = dynamic_cast<Adaptor*>(&n)) {
    const int child_polarity = ad->adaptor_kind() == AdaptorKind::series ? -polarity : polarity;
    for (auto& c : ad->children_) collect(*c, child_polarity);
  }
}

RootWaves Tree::process() {
  const double up = body_->reflected();
  const double down = root_->reflect_at_root(up, body_->port_resistance());
  body_->incident(down);
  return {up, down};
}

RootWaves Tree::process(double vin) {
  if (input_ == nullptr) throw WdfError("tree has no input source");
  input_->set_voltage(input_->polarity() * vin);
  return process();
}

void Tree::set_input(VoltageSource& source) {
  bool owned = &source == root_.get();
  for (Node* n : nodes_) owned = owned || n == &source;
  if (!owned) throw WdfError("input source does not belong to this tree");
  input_ = &source;
}

void Tree::reset() {
  root_->reset();
  for (Node* n : nodes_) n->reset();
}

double Tree::stored_energy() const {
  double e = 0.0;
  for (const Node* n : nodes_) {
    if (const auto* c = dynamic_cast<const Capacitor*>(n)) e += c->state() * c->state() / c->port_resistance();
  }
  return e;
}

}  // namespace klon::wdf
