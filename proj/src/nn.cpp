#include "scope/nn.hpp"

#include "scope/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace scope {

namespace {

Matrix glorot_uniform(Index rows, Index cols, Scalar fan_in, Scalar fan_out,
                      Rng& rng) {
  const Scalar bound = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
  return w;
}

GcnLayer make_gcn_layer(Index in, Index out, Rng& rng) {
  GcnLayer layer;
  layer.weight = glorot_uniform(in, out, static_cast<Scalar>(in),
                                static_cast<Scalar>(out), rng);
  layer.bias = Vector::Zero(out);
  return layer;
}

}  // namespace

ScopeNet init_params(Index patch, std::uint64_t seed) {
  Rng rng(seed);
  ScopeNet net;
  net.patch = patch;

  const Index widths[4] = {1, 16, 32, 64};
  for (int i = 0; i < 3; ++i) {
    ConvLayer& layer = net.fgen.layers[i];
    layer.in_channels = widths[i];
    layer.out_channels = widths[i + 1];
    // Conv fan counts include the 3x3 receptive field.
    layer.weight = glorot_uniform(9 * layer.in_channels, layer.out_channels,
                                  static_cast<Scalar>(9 * layer.in_channels),
                                  static_cast<Scalar>(9 * layer.out_channels), rng);
    layer.bias = Vector::Zero(layer.out_channels);
  }

  net.glayers.reserve(ScopeNet::kGraphLayers);
  for (Index j = 0; j < ScopeNet::kGraphLayers; ++j) {
    net.glayers.push_back(
        make_gcn_layer(ScopeNet::glayer_input(j), ScopeNet::kGraphChannels, rng));
  }
  net.head = make_gcn_layer(ScopeNet::kHeadInput, 2, rng);
  return net;
}

SparseOp normalized_adjacency(Index n_vertices,
                              std::span<const std::pair<int, int>> edges) {
  Vector degree = Vector::Ones(n_vertices);  // self-loop included
  for (const auto& [i, j] : edges) {
    degree[i] += 1.0;
    degree[j] += 1.0;
  }
  Vector inv_sqrt = degree.array().rsqrt().matrix();

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<size_t>(n_vertices) + 2 * edges.size());
  for (Index v = 0; v < n_vertices; ++v) {
    triplets.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
  }
  for (const auto& [i, j] : edges) {
    const Scalar val = inv_sqrt[i] * inv_sqrt[j];
    triplets.emplace_back(i, j, val);
    triplets.emplace_back(j, i, val);
  }
  SparseOp op(n_vertices, n_vertices);
  op.setFromTriplets(triplets.begin(), triplets.end());
  op.makeCompressed();
  return op;
}

SparseOp normalized_adjacency(const GridGraph& graph) {
  return normalized_adjacency(graph.grid.vertex_count(), graph.edges);
}

Matrix conv_forward(const Matrix& input, Index height, Index width,
                    const ConvLayer& layer, ConvCache* cache) {
  if (input.rows() != height * width || input.cols() != layer.in_channels) {
    throw std::invalid_argument("conv_forward: shape mismatch");
  }
  const Index cin = layer.in_channels;
  Matrix patches = Matrix::Zero(height * width, 9 * cin);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      const Index p = r * width + c;
      for (Index k = 0; k < 9; ++k) {
        const Index rr = r + k / 3 - 1;
        const Index cc = c + k % 3 - 1;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        patches.block(p, k * cin, 1, cin) = input.row(rr * width + cc);
      }
    }
  }
  Matrix preact = patches * layer.weight;
  preact.rowwise() += layer.bias.transpose();
  Matrix out = preact.cwiseMax(0.0);
  if (cache) {
    cache->patches = std::move(patches);
    cache->preact = std::move(preact);
  }
  return out;
}

Matrix conv_backward(const Matrix& grad_out, Index height, Index width,
                     const ConvLayer& layer, const ConvCache& cache,
                     Matrix& grad_weight, Vector& grad_bias) {
  if (grad_out.rows() != cache.preact.rows() ||
      grad_out.cols() != cache.preact.cols()) {
    throw std::invalid_argument("conv_backward: stale cache");
  }
  const Matrix grad_pre =
      ((cache.preact.array() > 0.0).cast<Scalar>() * grad_out.array()).matrix();
  grad_weight = cache.patches.transpose() * grad_pre;
  grad_bias = grad_pre.colwise().sum().transpose();

  const Matrix grad_patches = grad_pre * layer.weight.transpose();
  const Index cin = layer.in_channels;
  Matrix grad_in = Matrix::Zero(height * width, cin);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      const Index p = r * width + c;
      for (Index k = 0; k < 9; ++k) {
        const Index rr = r + k / 3 - 1;
        const Index cc = c + k % 3 - 1;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        grad_in.row(rr * width + cc) += grad_patches.block(p, k * cin, 1, cin);
      }
    }
  }
  return grad_in;
}

Matrix gcn_forward(const SparseOp& a_norm, const Matrix& h_in,
                   const GcnLayer& layer, Activation activation,
                   GcnCache* cache) {
  if (h_in.cols() != layer.weight.rows() || a_norm.cols() != h_in.rows()) {
    throw std::invalid_argument("gcn_forward: shape mismatch");
  }
  Matrix aggregated = a_norm * h_in;
  Matrix preact = aggregated * layer.weight;
  preact.rowwise() += layer.bias.transpose();
  Matrix out =
      activation == Activation::Relu ? preact.cwiseMax(0.0).eval() : preact;
  if (cache) {
    cache->aggregated = std::move(aggregated);
    cache->preact = std::move(preact);
    cache->activation = activation;
  }
  return out;
}

Matrix gcn_backward(const SparseOp& a_norm, const Matrix& grad_out,
                    const GcnLayer& layer, const GcnCache& cache,
                    Matrix& grad_weight, Vector& grad_bias) {
  if (grad_out.rows() != cache.preact.rows() ||
      grad_out.cols() != cache.preact.cols()) {
    throw std::invalid_argument("gcn_backward: stale cache");
  }
  Matrix grad_pre;
  if (cache.activation == Activation::Relu) {
    grad_pre =
        ((cache.preact.array() > 0.0).cast<Scalar>() * grad_out.array()).matrix();
  } else {
    grad_pre = grad_out;
  }
  grad_weight = cache.aggregated.transpose() * grad_pre;
  grad_bias = grad_pre.colwise().sum().transpose();
  // The operator is symmetric, so A^T = A.
  return a_norm * (grad_pre * layer.weight.transpose());
}

Matrix graph_module_forward(const SparseOp& a_norm, const Matrix& pooled,
                            const ScopeNet& net, ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  if (&cc.pooled != &pooled) cc.pooled = pooled;
  if (&cc.a_norm != &a_norm) cc.a_norm = a_norm;
  cc.glayers.assign(ScopeNet::kGraphLayers, GcnCache{});
  cc.gouts.assign(ScopeNet::kGraphLayers, Matrix{});

  // Layers 0..2 chain directly; layers 3..10 take [out(j-3), out(j-1)];
  // the head takes [pooled, out(10)].
  for (Index j = 0; j < ScopeNet::kGraphLayers; ++j) {
    Matrix in;
    if (j == 0) {
      in = cc.pooled;
    } else if (j < 3) {
      in = cc.gouts[j - 1];
    } else {
      in.resize(pooled.rows(), 2 * ScopeNet::kGraphChannels);
      in << cc.gouts[j - 3], cc.gouts[j - 1];
    }
    cc.gouts[j] =
        gcn_forward(cc.a_norm, in, net.glayers[j], Activation::Relu, &cc.glayers[j]);
  }

  Matrix head_in(pooled.rows(), ScopeNet::kHeadInput);
  head_in << cc.pooled, cc.gouts[ScopeNet::kGraphLayers - 1];
  return gcn_forward(cc.a_norm, head_in, net.head, Activation::None, &cc.head);
}

Matrix scope_forward(const ScopeNet& net, const GrayImage& image,
                     const GridGraph& graph, ForwardCache* cache) {
  const Index h = image.height(), w = image.width();
  if (graph.grid.image_height != h || graph.grid.image_width != w ||
      graph.grid.patch != net.patch) {
    throw std::invalid_argument("scope_forward: graph does not match image/net");
  }
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.grid = graph.grid;
  cc.a_norm = normalized_adjacency(graph);

  cc.image_col = Eigen::Map<const Matrix>(image.pix.data(), h * w, 1);
  Matrix feat = cc.image_col;
  for (int i = 0; i < 3; ++i) {
    feat = conv_forward(feat, h, w, net.fgen.layers[i], &cc.conv[i]);
  }
  cc.pooled = pool_node_features(feat, graph.grid, &cc.pool);
  return graph_module_forward(cc.a_norm, cc.pooled, net, &cc);
}

ScopeGrads zero_grads(const ScopeNet& net) {
  ScopeGrads g;
  for (int i = 0; i < 3; ++i) {
    g.conv_weight[i] = Matrix::Zero(net.fgen.layers[i].weight.rows(),
                                    net.fgen.layers[i].weight.cols());
    g.conv_bias[i] = Vector::Zero(net.fgen.layers[i].bias.size());
  }
  g.gcn_weight.resize(net.glayers.size());
  g.gcn_bias.resize(net.glayers.size());
  for (size_t j = 0; j < net.glayers.size(); ++j) {
    g.gcn_weight[j] = Matrix::Zero(net.glayers[j].weight.rows(),
                                   net.glayers[j].weight.cols());
    g.gcn_bias[j] = Vector::Zero(net.glayers[j].bias.size());
  }
  g.head_weight = Matrix::Zero(net.head.weight.rows(), net.head.weight.cols());
  g.head_bias = Vector::Zero(net.head.bias.size());
  return g;
}

void accumulate(ScopeGrads& into, const ScopeGrads& from) {
  for (int i = 0; i < 3; ++i) {
    into.conv_weight[i] += from.conv_weight[i];
    into.conv_bias[i] += from.conv_bias[i];
  }
  for (size_t j = 0; j < into.gcn_weight.size(); ++j) {
    into.gcn_weight[j] += from.gcn_weight[j];
    into.gcn_bias[j] += from.gcn_bias[j];
  }
  into.head_weight += from.head_weight;
  into.head_bias += from.head_bias;
}

void scale(ScopeGrads& grads, Scalar factor) {
  for (int i = 0; i < 3; ++i) {
    grads.conv_weight[i] *= factor;
    grads.conv_bias[i] *= factor;
  }
  for (size_t j = 0; j < grads.gcn_weight.size(); ++j) {
    grads.gcn_weight[j] *= factor;
    grads.gcn_bias[j] *= factor;
  }
  grads.head_weight *= factor;
  grads.head_bias *= factor;
}

ScopeGrads scope_backward(const ScopeNet& net, const ForwardCache& cache,
                          const Matrix& grad_logits) {
  ScopeGrads g = zero_grads(net);
  const Index kc = ScopeNet::kGraphChannels;
  const Index n_layers = ScopeNet::kGraphLayers;

  Matrix grad_pooled = Matrix::Zero(cache.pooled.rows(), cache.pooled.cols());
  std::vector<Matrix> grad_outs(n_layers);
  for (Index j = 0; j < n_layers; ++j) {
    grad_outs[j] = Matrix::Zero(cache.gouts[j].rows(), cache.gouts[j].cols());
  }

  const Matrix grad_head_in = gcn_backward(cache.a_norm, grad_logits, net.head,
                                           cache.head, g.head_weight, g.head_bias);
  grad_pooled += grad_head_in.leftCols(ScopeNet::kPooledChannels);
  grad_outs[n_layers - 1] += grad_head_in.rightCols(kc);

  for (Index j = n_layers - 1; j >= 0; --j) {
    const Matrix grad_in =
        gcn_backward(cache.a_norm, grad_outs[j], net.glayers[j],
                     cache.glayers[j], g.gcn_weight[j], g.gcn_bias[j]);
    if (j == 0) {
      grad_pooled += grad_in;
    } else if (j < 3) {
      grad_outs[j - 1] += grad_in;
    } else {
      grad_outs[j - 3] += grad_in.leftCols(kc);
      grad_outs[j - 1] += grad_in.rightCols(kc);
    }
  }

  Matrix grad_feat = backprop_pool(grad_pooled, cache.pool);
  const Index h = cache.grid.image_height, w = cache.grid.image_width;
  for (int i = 2; i >= 0; --i) {
    grad_feat = conv_backward(grad_feat, h, w, net.fgen.layers[i], cache.conv[i],
                              g.conv_weight[i], g.conv_bias[i]);
  }
  return g;
}

std::vector<NamedParam> named_params(ScopeNet& net) {
  std::vector<NamedParam> out;
  char name[32];
  for (int i = 0; i < 3; ++i) {
    ConvLayer& layer = net.fgen.layers[i];
    std::snprintf(name, sizeof name, "conv%d.weight", i + 1);
    out.push_back({name, layer.weight.data(), layer.weight.rows(), layer.weight.cols()});
    std::snprintf(name, sizeof name, "conv%d.bias", i + 1);
    out.push_back({name, layer.bias.data(), layer.bias.size(), 1});
  }
  for (size_t j = 0; j < net.glayers.size(); ++j) {
    GcnLayer& layer = net.glayers[j];
    std::snprintf(name, sizeof name, "gcn%02zu.weight", j + 1);
    out.push_back({name, layer.weight.data(), layer.weight.rows(), layer.weight.cols()});
    std::snprintf(name, sizeof name, "gcn%02zu.bias", j + 1);
    out.push_back({name, layer.bias.data(), layer.bias.size(), 1});
  }
  out.push_back({"head.weight", net.head.weight.data(), net.head.weight.rows(),
                 net.head.weight.cols()});
  out.push_back({"head.bias", net.head.bias.data(), net.head.bias.size(), 1});
  return out;
}

Index param_count(const ScopeNet& net) {
  Index n = 0;
  for (const NamedParam& p : named_params(const_cast<ScopeNet&>(net))) {
    n += p.rows * p.cols;
  }
  return n;
}

Vector pack_params(const ScopeNet& net) {
  Vector flat(param_count(net));
  Index at = 0;
  for (const NamedParam& p : named_params(const_cast<ScopeNet&>(net))) {
    const Index n = p.rows * p.cols;
    flat.segment(at, n) = Eigen::Map<const Vector>(p.data, n);
    at += n;
  }
  return flat;
}

void unpack_params(ScopeNet& net, const Vector& flat) {
  if (flat.size() != param_count(net)) {
    throw std::invalid_argument("unpack_params: size mismatch");
  }
  Index at = 0;
  for (const NamedParam& p : named_params(net)) {
    const Index n = p.rows * p.cols;
    Eigen::Map<Vector>(p.data, n) = flat.segment(at, n);
    at += n;
  }
}

Vector pack_grads(const ScopeNet& net, const ScopeGrads& grads) {
  Vector flat(param_count(net));
  Index at = 0;
  const auto put = [&](const Scalar* data, Index n) {
    flat.segment(at, n) = Eigen::Map<const Vector>(data, n);
    at += n;
  };
  for (int i = 0; i < 3; ++i) {
    put(grads.conv_weight[i].data(), grads.conv_weight[i].size());
    put(grads.conv_bias[i].data(), grads.conv_bias[i].size());
  }
  for (size_t j = 0; j < grads.gcn_weight.size(); ++j) {
    put(grads.gcn_weight[j].data(), grads.gcn_weight[j].size());
    put(grads.gcn_bias[j].data(), grads.gcn_bias[j].size());
  }
  put(grads.head_weight.data(), grads.head_weight.size());
  put(grads.head_bias.data(), grads.head_bias.size());
  return flat;
}

}  // namespace scope
