#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spil/prob.hpp"
#include "spil/random.hpp"

namespace spil {

struct Tensor {
    std::vector<std::size_t> shape;
    Vec data;

    std::size_t size() const { return data.size(); }
};

/// Named parameter arrays with a stable (insertion) iteration order. The
/// order defines the layout of checkpoints and of flat coordinate indexing.
class ParameterSet {
public:
    Tensor& add(const std::string& name, std::vector<std::size_t> shape);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }

    std::size_t total_size() const;
    void fill(double value);
    bool finite() const;

    /// Fresh set with identical names/shapes, zero-valued.
    ParameterSet zeros_like() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class Activation { identity, tanh };

/// Dense stack operating on a ParameterSet. Layer l owns weights
/// "<prefix>.W<l>" (row-major [out x in]) and "<prefix>.b<l>".
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string prefix, std::vector<std::size_t> dims, Activation hidden, Activation output);

    void init(ParameterSet& params, RandomStream& rng) const;

    /// Layer activations; acts[0] is the input, acts[l + 1] the output of
    /// layer l. Everything backward needs.
    struct Cache {
        std::vector<Vec> acts;
    };

    Vec forward(const ParameterSet& params, std::span<const double> input, Cache* cache = nullptr) const;

    /// Propagates d_output back to the input; accumulates parameter
    /// gradients into grads when non-null.
    Vec backward(const ParameterSet& params, const Cache& cache, std::span<const double> d_output,
                 ParameterSet* grads) const;

    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    const std::string& prefix() const { return prefix_; }

private:
    Activation activation_at(std::size_t layer) const;

    std::string prefix_;
    std::vector<std::size_t> dims_;
    Activation hidden_ = Activation::tanh;
    Activation output_ = Activation::identity;
};

enum class RnnCell { gru, lstm };

RnnCell rnn_cell_from_string(const std::string& s);
std::string to_string(RnnCell cell);

/// Bidirectional recurrent layer: independent forward and backward passes
/// over the sequence, per-step outputs concatenated to 2*hidden. Parameter
/// names are "<prefix>.fw.W" / ".fw.U" / ".fw.b" and the ".bw." mirror.
class BiRnn {
public:
    BiRnn() = default;
    BiRnn(std::string prefix, std::size_t input_dim, std::size_t hidden_dim, RnnCell cell);

    void init(ParameterSet& params, RandomStream& rng) const;

    struct DirCache {
        std::vector<Vec> gates;    // per step: sigmoid/tanh gate values
        std::vector<Vec> extra;    // gru: U_n h; lstm: cell states
        std::vector<Vec> hidden;   // per step: h after the step
    };
    struct Cache {
        std::vector<Vec> inputs;
        DirCache fw, bw;
    };

    std::vector<Vec> forward(const ParameterSet& params, const std::vector<Vec>& inputs,
                             Cache* cache = nullptr) const;
    std::vector<Vec> backward(const ParameterSet& params, const Cache& cache,
                              const std::vector<Vec>& d_outputs, ParameterSet* grads) const;

    std::size_t input_dim() const { return input_; }
    std::size_t output_dim() const { return 2 * hidden_; }

private:
    std::size_t gate_rows() const { return (cell_ == RnnCell::gru ? 3 : 4) * hidden_; }
    void run_dir(const ParameterSet& params, const std::string& sub, const std::vector<Vec>& inputs,
                 bool reverse, DirCache& cache) const;
    void back_dir(const ParameterSet& params, const std::string& sub, const Cache& cache,
                  const DirCache& dir, bool reverse, const std::vector<Vec>& d_hidden,
                  std::vector<Vec>& d_inputs, ParameterSet* grads) const;

    std::string prefix_;
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    RnnCell cell_ = RnnCell::gru;
};

/// Row-lookup table ("<prefix>.table", [rows x dim]).
class Embedding {
public:
    Embedding() = default;
    Embedding(std::string prefix, std::size_t rows, std::size_t dim);

    void init(ParameterSet& params, RandomStream& rng) const;
    Vec forward(const ParameterSet& params, std::size_t row) const;
    void backward(std::size_t row, std::span<const double> d_output, ParameterSet* grads) const;

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }

private:
    std::string prefix_;
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
};

/// Soft bound applied to log-variance head outputs; keeps every emitted
/// variance in [e^-B, e^B] so KL terms and sampling stay finite.
inline constexpr double kLogVarBound = 10.0;

/// Head raw output of size 2D -> Gaussian: mean = raw[0..D), log-variance =
/// B tanh(raw[D..2D) / B).
DiagonalGaussian gaussian_from_head(std::span<const double> raw);

/// Chain rule through gaussian_from_head: returns d_raw (size 2D).
Vec gaussian_head_backward(std::span<const double> raw, std::span<const double> d_mean,
                           std::span<const double> d_logvar);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer over a trainable subset of a
/// ParameterSet. Moment arrays shape-match their parameters.
class Adam {
public:
    Adam(const ParameterSet& params, std::vector<std::string> trainable_names, AdamConfig cfg = {});

    void step(ParameterSet& params, const ParameterSet& grads);
    std::uint64_t step_count() const { return t_; }
    const std::vector<std::string>& trainable_names() const { return names_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::string> names_;
    std::vector<Vec> m_, v_;
};

/// All parameter names starting with any of the given prefixes, in set order.
std::vector<std::string> names_with_prefixes(const ParameterSet& params,
                                             std::span<const std::string> prefixes);

/// Central finite differences (step 1e-5) against the supplied analytic
/// gradient over a sampled subset of at least min_coords coordinates
/// (restricted to name_filter when non-empty). Returns the maximum relative
/// error |ga - gfd| / max(|ga|, |gfd|, floor). loss_fn must be deterministic:
/// freeze any random draws before calling.
double gradient_check(const std::function<double(const ParameterSet&)>& loss_fn,
                      const ParameterSet& params, const ParameterSet& analytic_grads,
                      RandomStream& rng, const std::vector<std::string>& name_filter = {},
                      std::size_t min_coords = 200, double fd_step = 1e-5, double floor = 1e-5);

/// Checkpoint = manifest.txt (key/value header plus tensor table) and
/// params.bin (flat little-endian float64 in manifest order). Round-trips
/// bit-exactly.
void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params,
                     const std::vector<std::pair<std::string, std::string>>& fields);
ParameterSet load_checkpoint(const std::filesystem::path& dir,
                             std::vector<std::pair<std::string, std::string>>* fields = nullptr);

/// Convenience lookup into the fields returned by load_checkpoint.
std::string checkpoint_field(const std::vector<std::pair<std::string, std::string>>& fields,
                             const std::string& key);

}  // namespace spil
