#pragma once

#include "scope/graph.hpp"
#include "scope/image.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scope {

enum class Activation { Relu, None };

/// 3x3 convolution layer, zero padding 1, stride 1. The weight is stored as
/// (9*in_channels) x out_channels so the forward pass is an im2col matrix
/// product; column k*in_channels+ci holds kernel offset k = (dr+1)*3+(dc+1).
struct ConvLayer {
  Index in_channels = 0;
  Index out_channels = 0;
  Matrix weight;  // (9*in_channels) x out_channels
  Vector bias;    // out_channels
};

/// Trainable pixel-feature extractor: three 3x3 conv + ReLU layers widening
/// 1 -> 16 -> 32 -> 64; spatial dims are preserved.
struct FeatureGenerator {
  std::array<ConvLayer, 3> layers;
};

struct GcnLayer {
  Matrix weight;  // in x out
  Vector bias;    // out
};

/// Graph segmentation network: the feature generator followed by per-patch
/// max-pooling and an 11-layer graph convolution stack. Every internal graph
/// layer emits 32 channels; layers 4..11 take the 64-wide concatenation of
/// the outputs of layers j-3 and j-1. The head maps the 96-wide
/// concatenation of pooled pixel features (64) and the last graph features
/// (32) to 2 logits.
struct ScopeNet {
  static constexpr Index kGraphLayers = 11;
  static constexpr Index kPooledChannels = 64;
  static constexpr Index kGraphChannels = 32;
  static constexpr Index kHeadInput = 96;

  Index patch = 1;
  FeatureGenerator fgen;
  std::vector<GcnLayer> glayers;  // kGraphLayers entries
  GcnLayer head;

  /// Input width of graph layer j (0-based).
  static Index glayer_input(Index j) {
    if (j == 0) return kPooledChannels;
    if (j < 3) return kGraphChannels;
    return 2 * kGraphChannels;
  }
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
/// reproducible per seed.
ScopeNet init_params(Index patch, std::uint64_t seed);

/// D^{-1/2} (A + I) D^{-1/2} as a compressed sparse row operator.
SparseOp normalized_adjacency(Index n_vertices,
                              std::span<const std::pair<int, int>> edges);
SparseOp normalized_adjacency(const GridGraph& graph);

struct ConvCache {
  Matrix patches;  // (H*W) x (9*in_channels)
  Matrix preact;   // (H*W) x out_channels
};

/// ReLU(im2col(input) * W + b). input is (H*W) x in_channels.
Matrix conv_forward(const Matrix& input, Index height, Index width,
                    const ConvLayer& layer, ConvCache* cache = nullptr);

/// Returns the gradient w.r.t. the layer input; fills parameter gradients.
Matrix conv_backward(const Matrix& grad_out, Index height, Index width,
                     const ConvLayer& layer, const ConvCache& cache,
                     Matrix& grad_weight, Vector& grad_bias);

struct GcnCache {
  Matrix aggregated;  // A_norm * H_in
  Matrix preact;
  Activation activation = Activation::Relu;
};

/// activation(A_norm * H_in * W + b).
Matrix gcn_forward(const SparseOp& a_norm, const Matrix& h_in,
                   const GcnLayer& layer, Activation activation,
                   GcnCache* cache = nullptr);

Matrix gcn_backward(const SparseOp& a_norm, const Matrix& grad_out,
                    const GcnLayer& layer, const GcnCache& cache,
                    Matrix& grad_weight, Vector& grad_bias);

/// Activations retained by scope_forward for the backward pass.
struct ForwardCache {
  std::array<ConvCache, 3> conv;
  Matrix image_col;                 // (H*W) x 1 input view
  PoolCache pool;
  Matrix pooled;                    // N x 64
  std::vector<GcnCache> glayers;    // kGraphLayers entries
  std::vector<Matrix> gouts;        // outputs of graph layers
  GcnCache head;
  SparseOp a_norm;
  PatchGrid grid;
};

/// The graph stack alone: 11 layers with skip wiring plus the head, applied
/// to already-pooled node features over an arbitrary normalized operator.
Matrix graph_module_forward(const SparseOp& a_norm, const Matrix& pooled,
                            const ScopeNet& net, ForwardCache* cache = nullptr);

/// Full pipeline: feature generator -> per-patch max-pool -> graph stack ->
/// head. Returns N x 2 logits.
Matrix scope_forward(const ScopeNet& net, const GrayImage& image,
                     const GridGraph& graph, ForwardCache* cache = nullptr);

/// Parameter gradients, mirroring ScopeNet's layout.
struct ScopeGrads {
  std::array<Matrix, 3> conv_weight;
  std::array<Vector, 3> conv_bias;
  std::vector<Matrix> gcn_weight;
  std::vector<Vector> gcn_bias;
  Matrix head_weight;
  Vector head_bias;
};

ScopeGrads zero_grads(const ScopeNet& net);
void accumulate(ScopeGrads& into, const ScopeGrads& from);
void scale(ScopeGrads& grads, Scalar factor);

/// Exact reverse-mode gradients for every parameter given d(loss)/d(logits).
ScopeGrads scope_backward(const ScopeNet& net, const ForwardCache& cache,
                          const Matrix& grad_logits);

/// Named view over all parameters, in a fixed canonical order. Biases are
/// exposed as single-column matrices.
struct NamedParam {
  std::string name;
  Scalar* data;
  Index rows;
  Index cols;
};
std::vector<NamedParam> named_params(ScopeNet& net);

Index param_count(const ScopeNet& net);
Vector pack_params(const ScopeNet& net);
void unpack_params(ScopeNet& net, const Vector& flat);
Vector pack_grads(const ScopeNet& net, const ScopeGrads& grads);

}  // namespace scope
