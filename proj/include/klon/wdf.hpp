#pragma once

// Wave digital filter building blocks.
//
// Every port carries voltage waves a = v + R0 i (incident) and b = v - R0 i
// (reflected), with i flowing into the element. A tree is a root element
// connected to a body made of one-ports and series/parallel adaptors. Each
// sample runs one upward pass (leaves reflect toward the root), the root
// reflection, and one downward pass that commits element state.
//
// Series adaptors use the loop convention (all port voltages sum to zero),
// so a series adaptor's children are oriented opposite to the adaptor's own
// upward port. Node::polarity() records the accumulated orientation relative
// to the tree root; oriented_voltage()/oriented_current() undo it.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "klon/diode.hpp"

namespace klon::wdf {

struct WavePort {
  double R0 = 1.0;
  double a = 0.0;
  double b = 0.0;
};

inline double wave_to_voltage(const WavePort& p) { return 0.5 * (p.a + p.b); }
inline double wave_to_current(const WavePort& p) { return (p.a - p.b) / (2.0 * p.R0); }
// Inverse of the two above.
inline WavePort waves_from_kirchhoff(double v, double i, double R0) { return {R0, v + R0 * i, v - R0 * i}; }

class Adaptor;
class Tree;

class Node {
 public:
  virtual ~Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  virtual std::string_view kind() const = 0;
  // False for elements that can only terminate a tree at its root.
  virtual bool adaptable() const { return true; }

  double port_resistance() const { return R0_; }
  WavePort port() const { return {R0_, a_, b_}; }
  double voltage() const { return wave_to_voltage(port()); }
  double current() const { return wave_to_current(port()); }

  int polarity() const { return polarity_; }
  double oriented_voltage() const { return polarity_ * voltage(); }
  double oriented_current() const { return polarity_ * current(); }

  // Upward pass: produce the wave this node sends toward its parent.
  virtual double reflected() = 0;
  // Downward pass: accept the wave arriving from the parent and commit state.
  virtual void incident(double a) = 0;
  // Termination of the tree: `a` arrives from a body of port resistance
  // `port_R`; returns the wave sent back into the body. The default treats
  // an adaptable element as a Thevenin source seen through a mismatched port.
  virtual double reflect_at_root(double a, double port_R);

  virtual void reset() {}

 protected:
  Node() = default;
  // Changes this port's resistance and re-adapts every ancestor adaptor.
  void set_port_resistance(double R0);

  double R0_ = 1.0;
  double a_ = 0.0;
  double b_ = 0.0;

 private:
  friend class Adaptor;
  friend class Tree;
  Adaptor* parent_ = nullptr;
  int polarity_ = 1;
};

class Resistor final : public Node {
 public:
  explicit Resistor(double R);
  std::string_view kind() const override { return "resistor"; }
  void set_resistance(double R);
  double reflected() override { return b_ = 0.0; }
  void incident(double a) override { a_ = a; }
};

// Bilinear (trapezoidal) capacitor: R0 = T / 2C, b[n] = a[n-1].
class Capacitor final : public Node {
 public:
  Capacitor(double C, double fs);
  std::string_view kind() const override { return "capacitor"; }
  void set_capacitance(double C);
  void set_sample_rate(double fs);
  double capacitance() const { return C_; }
  double reflected() override { return b_ = state_; }
  void incident(double a) override { a_ = a; state_ = a; }
  void reset() override { state_ = 0.0; a_ = b_ = 0.0; }
  // Stored wave; state^2 / R0 is the capacitor's share of the tree's pseudo-energy.
  double state() const { return state_; }

 private:
  double C_;
  double fs_;
  double state_ = 0.0;
};

class VoltageSource : public Node {
 public:
  void set_voltage(double v) { Vs_ = v; }
  double source_voltage() const { return Vs_; }

 protected:
  explicit VoltageSource(double v) : Vs_(v) {}
  double Vs_;
};

// Thevenin source: Vs in series with R. Matched: b = Vs.
class ResistiveVoltageSource final : public VoltageSource {
 public:
  ResistiveVoltageSource(double R, double Vs = 0.0);
  std::string_view kind() const override { return "resistive_voltage_source"; }
  void set_resistance(double R);
  double reflected() override { return b_ = Vs_; }
  void incident(double a) override { a_ = a; }
};

// Root-only: b = 2 Vs - a.
class IdealVoltageSource final : public VoltageSource {
 public:
  explicit IdealVoltageSource(double Vs = 0.0) : VoltageSource(Vs) {}
  std::string_view kind() const override { return "ideal_voltage_source"; }
  bool adaptable() const override { return false; }
  double reflected() override;
  void incident(double a) override;
  double reflect_at_root(double a, double port_R) override;
};

// Root-only antiparallel diode pair.
class DiodePair final : public Node {
 public:
  explicit DiodePair(const DiodeParams& p) : params_(p) {}
  std::string_view kind() const override { return "diode_pair"; }
  bool adaptable() const override { return false; }
  double reflected() override;
  void incident(double a) override;
  double reflect_at_root(double a, double port_R) override;
  const DiodeParams& params() const { return params_; }

 private:
  DiodeParams params_;
};

enum class AdaptorKind { series, parallel };

struct Scattering {
  double up = 0.0;            // wave sent to the parent
  std::vector<double> down;   // waves sent to each child
};

// Scattering of an N-port series/parallel adaptor whose upward port is
// adapted (R_up = sum R_k for series, 1/R_up = sum 1/R_k for parallel).
// `b_children` are the waves arriving from the children.
Scattering scatter(AdaptorKind kind, std::span<const double> child_R, double a_up,
                   std::span<const double> b_children);

class Adaptor final : public Node {
 public:
  Adaptor(AdaptorKind kind, std::vector<std::unique_ptr<Node>> children);

  std::string_view kind() const override { return kind_ == AdaptorKind::series ? "series" : "parallel"; }
  AdaptorKind adaptor_kind() const { return kind_; }
  std::size_t size() const { return children_.size(); }
  Node& child(std::size_t i) { return *children_[i]; }
  const Node& child(std::size_t i) const { return *children_[i]; }

  double reflected() override;
  void incident(double a) override;
  void reset() override;

  // Number of times this adaptor recomputed its scattering coefficients.
  std::size_t adapt_count() const { return adapt_count_; }

 private:
  friend class Node;
  friend class Tree;
  void adapt();

  AdaptorKind kind_;
  std::vector<std::unique_ptr<Node>> children_;
  std::vector<double> gamma_;
  std::vector<double> b_children_;
  std::size_t adapt_count_ = 0;
};

template <typename... Nodes>
std::unique_ptr<Adaptor> make_series(std::unique_ptr<Nodes>... nodes) {
  std::vector<std::unique_ptr<Node>> v;
  (v.push_back(std::move(nodes)), ...);
  return std::make_unique<Adaptor>(AdaptorKind::series, std::move(v));
}

template <typename... Nodes>
std::unique_ptr<Adaptor> make_parallel(std::unique_ptr<Nodes>... nodes) {
  std::vector<std::unique_ptr<Node>> v;
  (v.push_back(std::move(nodes)), ...);
  return std::make_unique<Adaptor>(AdaptorKind::parallel, std::move(v));
}

struct RootWaves {
  double a = 0.0;  // arriving at the root from the body
  double b = 0.0;  // reflected by the root into the body
};

class Tree {
 public:
  // Throws WdfError if either part is missing or a root-only element sits
  // anywhere in the body (an unadapted root conflict).
  Tree(std::unique_ptr<Node> root, std::unique_ptr<Node> body);

  Tree(Tree&&) noexcept = default;
  Tree& operator=(Tree&&) noexcept = default;

  // One sample. Element states advance exactly once.
  RootWaves process();
  // Drives the designated input source with `vin` (physical orientation) first.
  RootWaves process(double vin);

  // The source that process(vin) drives. Must belong to this tree.
  void set_input(VoltageSource& source);

  Node& root() { return *root_; }
  Node& body() { return *body_; }
  const Node& root() const { return *root_; }
  const Node& body() const { return *body_; }

  void reset();
  // Pre-order list of body nodes (root excluded).
  const std::vector<Node*>& nodes() const { return nodes_; }
  // Sum over capacitors of state^2 / R0.
  double stored_energy() const;

 private:
  void collect(Node& n, int polarity);

  std::unique_ptr<Node> root_;
  std::unique_ptr<Node> body_;
  std::vector<Node*> nodes_;
  VoltageSource* input_ = nullptr;
};

}  // namespace klon::wdf
