#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "fepysr/dataset.hpp"
#include "fepysr/matrix.hpp"

namespace fepysr {

// Heterogeneous activation unit primitives (fun-net).
enum class HauOp { Square, Sin, Cos, Exp, Add, Mul };

inline bool is_binary(HauOp op) { return op == HauOp::Add || op == HauOp::Mul; }
const char* name(HauOp op);
HauOp hau_from_name(const std::string& s);

// Gradient step normalization: Global divides every weight by the norm of the
// full gradient; PerUnit normalizes each weight vector by its own norm.
enum class NormMode { Global, PerUnit };

struct FmnConfig {
  int depth = 4;
  int units_per_op = 2;
  std::vector<HauOp> fun_net = {HauOp::Square, HauOp::Sin, HauOp::Cos,
                                HauOp::Exp,    HauOp::Add, HauOp::Mul};
  double learning_rate = 0.5;
  int epochs = 100;
  int batch_size = 50;
  double lambda1 = 0.08;   // sparsity coefficient
  double lambda2 = 0.001;  // contrastive coefficient
  double epsilon = 1e-8;   // normalization floor
  NormMode norm_mode = NormMode::Global;
  std::uint64_t seed = 0;

  std::vector<std::vector<HauOp>> roster() const;  // depth x (fun_net x units_per_op)
  void validate() const;
};

struct FmnUnit {
  HauOp op;
  std::vector<double> w1;
  std::vector<double> w2;             // binary units only
  std::vector<std::uint8_t> forbidden;  // exp units: 1 marks masked input channels
};

struct FmnModel {
  int arity = 0;
  FmnConfig config;
  std::vector<std::vector<FmnUnit>> layers;
  std::vector<double> reg_weights;
  bool trained = false;

  // width(0) = arity; width(i) = width(i-1) + units in layer i.
  int width(int layers_done) const;
};

struct LossBreakdown {
  double total = 0.0, l2 = 0.0, sparse = 0.0, contrast = 0.0;
};

struct ForwardCache {
  std::vector<Matrix> ys;  // ys[0] = X, ys[i] = [ys[i-1], unit outputs]
  std::vector<std::vector<std::vector<double>>> z1;  // pre-activations per layer/unit
  std::vector<std::vector<std::vector<double>>> z2;  // second branch (binary units)
  std::vector<double> yhat;
  bool finite = true;
};

struct Gradients {
  std::vector<std::vector<std::vector<double>>> g1;
  std::vector<std::vector<std::vector<double>>> g2;
  std::vector<double> greg;
  bool finite = true;
};

struct TrainTrace {
  std::vector<LossBreakdown> epochs;  // full-data loss after each epoch
  int skipped_batches = 0;            // non-finite incidents
};

struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)] from the seeded
// generator; the exp-nesting mask is applied before return.
FmnModel fmn_init(const FmnConfig& cfg, int arity);

// For every exp unit, marks input channels that are outputs of exp units in
// preceding layers. Layout mirrors the model (layer -> unit -> channel flags,
// empty for unmasked units).
std::vector<std::vector<std::vector<std::uint8_t>>> build_exp_mask(const FmnModel& m);
void apply_exp_mask(FmnModel& m);

ForwardCache fmn_forward(const FmnModel& m, const Matrix& X);
LossBreakdown fmn_loss(const FmnModel& m, const ForwardCache& cache, std::span<const double> y);
Gradients fmn_backward(const FmnModel& m, const ForwardCache& cache, std::span<const double> y);
void fmn_step(FmnModel& m, const Gradients& g, double eta, double eps);

struct TrainResult {
  FmnModel model;
  TrainTrace trace;
};

// Mini-batch training for cfg.epochs epochs; per-epoch shuffling from the
// seeded generator. Non-finite batches are skipped and counted; an epoch in
// which every batch is non-finite raises TrainAbort.
TrainResult fmn_train(const FmnConfig& cfg, const Dataset& ds);

// Flat little-endian snapshot (config + weights + masks), for reproducibility
// and offline extraction.
std::vector<std::uint8_t> serialize_model(const FmnModel& m);
FmnModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const FmnModel& m, const std::filesystem::path& path);
FmnModel load_model(const std::filesystem::path& path);

}  // namespace fepysr
