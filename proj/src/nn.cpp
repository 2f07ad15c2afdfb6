#include "spil/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spil {

namespace {

// y := W x  (W row-major [out x in])
void matvec(const double* w, std::size_t out, std::size_t in, const double* x, double* y) {
    for (std::size_t i = 0; i < out; ++i) {
        const double* row = w + i * in;
        double acc = 0.0;
        for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

// dx += W^T dy
void tmatvec_acc(const double* w, std::size_t out, std::size_t in, const double* dy, double* dx) {
    for (std::size_t i = 0; i < out; ++i) {
        const double s = dy[i];
        if (s == 0.0) continue;
        const double* row = w + i * in;
        for (std::size_t j = 0; j < in; ++j) dx[j] += s * row[j];
    }
}

// dW += dy x^T
void outer_acc(double* dw, std::size_t out, std::size_t in, const double* dy, const double* x) {
    for (std::size_t i = 0; i < out; ++i) {
        const double s = dy[i];
        if (s == 0.0) continue;
        double* row = dw + i * in;
        for (std::size_t j = 0; j < in; ++j) row[j] += s * x[j];
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_uniform_fan_in(Tensor& t, std::size_t fan_in, RandomStream& rng) {
    double a = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    for (double& v : t.data) v = rng.uniform(-a, a);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterSet

Tensor& ParameterSet::add(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name)) throw std::invalid_argument("ParameterSet: duplicate name " + name);
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    index_[name] = tensors_.size();
    names_.push_back(name);
    tensors_.push_back(Tensor{std::move(shape), Vec(n, 0.0)});
    return tensors_.back();
}

Tensor& ParameterSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParameterSet: unknown name " + name);
    return tensors_[it->second];
}

const Tensor& ParameterSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParameterSet: unknown name " + name);
    return tensors_[it->second];
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const Tensor& t : tensors_) n += t.size();
    return n;
}

void ParameterSet::fill(double value) {
    for (Tensor& t : tensors_) std::fill(t.data.begin(), t.data.end(), value);
}

bool ParameterSet::finite() const {
    for (const Tensor& t : tensors_)
        for (double v : t.data)
            if (!std::isfinite(v)) return false;
    return true;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].shape);
    return out;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::string prefix, std::vector<std::size_t> dims, Activation hidden, Activation output)
    : prefix_(std::move(prefix)), dims_(std::move(dims)), hidden_(hidden), output_(output) {
    if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
    for (std::size_t d : dims_)
        if (d == 0) throw std::invalid_argument("Mlp: zero layer width");
}

Activation Mlp::activation_at(std::size_t layer) const {
    return layer + 2 == dims_.size() ? output_ : hidden_;
}

void Mlp::init(ParameterSet& params, RandomStream& rng) const {
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        Tensor& w = params.add(prefix_ + ".W" + std::to_string(l), {dims_[l + 1], dims_[l]});
        init_uniform_fan_in(w, dims_[l], rng);
        params.add(prefix_ + ".b" + std::to_string(l), {dims_[l + 1]});
    }
}

Vec Mlp::forward(const ParameterSet& params, std::span<const double> input, Cache* cache) const {
    if (input.size() != dims_.front()) {
        throw std::invalid_argument("Mlp::forward: input dimension mismatch for " + prefix_);
    }
    Vec act(input.begin(), input.end());
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(act);
    }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        const Tensor& w = params.at(prefix_ + ".W" + std::to_string(l));
        const Tensor& b = params.at(prefix_ + ".b" + std::to_string(l));
        Vec next(dims_[l + 1]);
        matvec(w.data.data(), dims_[l + 1], dims_[l], act.data(), next.data());
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += b.data[i];
        if (activation_at(l) == Activation::tanh) {
            for (double& v : next) v = std::tanh(v);
        }
        act = std::move(next);
        if (cache) cache->acts.push_back(act);
    }
    return act;
}

Vec Mlp::backward(const ParameterSet& params, const Cache& cache, std::span<const double> d_output,
                  ParameterSet* grads) const {
    if (cache.acts.size() != dims_.size()) throw std::invalid_argument("Mlp::backward: stale cache");
    Vec d(d_output.begin(), d_output.end());
    for (std::size_t l = dims_.size() - 1; l-- > 0;) {
        const Vec& out = cache.acts[l + 1];
        if (activation_at(l) == Activation::tanh) {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - out[i] * out[i];
        }
        const Tensor& w = params.at(prefix_ + ".W" + std::to_string(l));
        if (grads) {
            Tensor& dw = grads->at(prefix_ + ".W" + std::to_string(l));
            Tensor& db = grads->at(prefix_ + ".b" + std::to_string(l));
            outer_acc(dw.data.data(), dims_[l + 1], dims_[l], d.data(), cache.acts[l].data());
            for (std::size_t i = 0; i < d.size(); ++i) db.data[i] += d[i];
        }
        Vec d_in(dims_[l], 0.0);
        tmatvec_acc(w.data.data(), dims_[l + 1], dims_[l], d.data(), d_in.data());
        d = std::move(d_in);
    }
    return d;
}

// ---------------------------------------------------------------------------
// BiRnn

RnnCell rnn_cell_from_string(const std::string& s) {
    if (s == "gru") return RnnCell::gru;
    if (s == "lstm") return RnnCell::lstm;
    throw std::invalid_argument("unknown rnn cell: " + s);
}

std::string to_string(RnnCell cell) { return cell == RnnCell::gru ? "gru" : "lstm"; }

BiRnn::BiRnn(std::string prefix, std::size_t input_dim, std::size_t hidden_dim, RnnCell cell)
    : prefix_(std::move(prefix)), input_(input_dim), hidden_(hidden_dim), cell_(cell) {
    if (input_ == 0 || hidden_ == 0) throw std::invalid_argument("BiRnn: zero dimension");
}

void BiRnn::init(ParameterSet& params, RandomStream& rng) const {
    for (const char* sub : {".fw", ".bw"}) {
        Tensor& w = params.add(prefix_ + sub + ".W", {gate_rows(), input_});
        init_uniform_fan_in(w, input_, rng);
        Tensor& u = params.add(prefix_ + sub + ".U", {gate_rows(), hidden_});
        init_uniform_fan_in(u, hidden_, rng);
        params.add(prefix_ + sub + ".b", {gate_rows()});
    }
}

void BiRnn::run_dir(const ParameterSet& params, const std::string& sub, const std::vector<Vec>& inputs,
                    bool reverse, DirCache& cache) const {
    const Tensor& w = params.at(prefix_ + sub + ".W");
    const Tensor& u = params.at(prefix_ + sub + ".U");
    const Tensor& b = params.at(prefix_ + sub + ".b");
    const std::size_t T = inputs.size();
    const std::size_t H = hidden_;
    cache.gates.assign(T, Vec(gate_rows()));
    cache.extra.assign(T, Vec(cell_ == RnnCell::gru ? H : 2 * H));
    cache.hidden.assign(T, Vec(H));

    Vec h(H, 0.0), c(H, 0.0), pre(gate_rows()), uh(gate_rows());
    for (std::size_t step = 0; step < T; ++step) {
        std::size_t t = reverse ? T - 1 - step : step;
        const Vec& x = inputs[t];
        matvec(w.data.data(), gate_rows(), input_, x.data(), pre.data());
        matvec(u.data.data(), gate_rows(), H, h.data(), uh.data());
        Vec& g = cache.gates[t];
        if (cell_ == RnnCell::gru) {
            // gate layout: [r, z, n]
            for (std::size_t i = 0; i < H; ++i) {
                g[i] = sigmoid(pre[i] + uh[i] + b.data[i]);
                g[H + i] = sigmoid(pre[H + i] + uh[H + i] + b.data[H + i]);
            }
            for (std::size_t i = 0; i < H; ++i) {
                cache.extra[t][i] = uh[2 * H + i];
                g[2 * H + i] = std::tanh(pre[2 * H + i] + g[i] * uh[2 * H + i] + b.data[2 * H + i]);
            }
            for (std::size_t i = 0; i < H; ++i) {
                h[i] = (1.0 - g[H + i]) * g[2 * H + i] + g[H + i] * h[i];
            }
        } else {
            // gate layout: [i, f, g, o]; extra: [c_prev, c_new]
            for (std::size_t i = 0; i < H; ++i) cache.extra[t][i] = c[i];
            for (std::size_t i = 0; i < 4 * H; ++i) {
                double a = pre[i] + uh[i] + b.data[i];
                g[i] = i < 2 * H || i >= 3 * H ? sigmoid(a) : std::tanh(a);
            }
            for (std::size_t i = 0; i < H; ++i) {
                c[i] = g[H + i] * c[i] + g[i] * g[2 * H + i];
                cache.extra[t][H + i] = c[i];
                h[i] = g[3 * H + i] * std::tanh(c[i]);
            }
        }
        cache.hidden[t] = h;
    }
}

std::vector<Vec> BiRnn::forward(const ParameterSet& params, const std::vector<Vec>& inputs,
                                Cache* cache) const {
    if (inputs.empty()) throw std::invalid_argument("BiRnn::forward: empty sequence");
    for (const Vec& x : inputs)
        if (x.size() != input_) throw std::invalid_argument("BiRnn::forward: input dimension mismatch");

    Cache local;
    Cache& c = cache ? *cache : local;
    c.inputs = inputs;
    run_dir(params, ".fw", inputs, false, c.fw);
    run_dir(params, ".bw", inputs, true, c.bw);

    std::vector<Vec> out(inputs.size(), Vec(2 * hidden_));
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        std::copy(c.fw.hidden[t].begin(), c.fw.hidden[t].end(), out[t].begin());
        std::copy(c.bw.hidden[t].begin(), c.bw.hidden[t].end(), out[t].begin() + hidden_);
    }
    return out;
}

void BiRnn::back_dir(const ParameterSet& params, const std::string& sub, const Cache& cache,
                     const DirCache& dir, bool reverse, const std::vector<Vec>& d_hidden,
                     std::vector<Vec>& d_inputs, ParameterSet* grads) const {
    const Tensor& w = params.at(prefix_ + sub + ".W");
    const Tensor& u = params.at(prefix_ + sub + ".U");
    const std::size_t T = cache.inputs.size();
    const std::size_t H = hidden_;
    Tensor* dw = grads ? &grads->at(prefix_ + sub + ".W") : nullptr;
    Tensor* du = grads ? &grads->at(prefix_ + sub + ".U") : nullptr;
    Tensor* db = grads ? &grads->at(prefix_ + sub + ".b") : nullptr;

    Vec dh(H, 0.0), dc(H, 0.0), da(gate_rows());
    for (std::size_t step = T; step-- > 0;) {
        std::size_t t = reverse ? T - 1 - step : step;
        // Hidden state entering this step (zero at the start of the pass).
        bool first = step == 0;
        std::size_t t_prev = reverse ? t + 1 : t - 1;
        const Vec* h_prev = first ? nullptr : &dir.hidden[t_prev];

        for (std::size_t i = 0; i < H; ++i) dh[i] += d_hidden[t][i];
        const Vec& g = dir.gates[t];

        if (cell_ == RnnCell::gru) {
            std::fill(da.begin(), da.end(), 0.0);
            Vec dh_next(H, 0.0);
            for (std::size_t i = 0; i < H; ++i) {
                double r = g[i], z = g[H + i], n = g[2 * H + i];
                double hp = h_prev ? (*h_prev)[i] : 0.0;
                double dz = dh[i] * (hp - n);
                double dn = dh[i] * (1.0 - z);
                dh_next[i] = dh[i] * z;
                double dan = dn * (1.0 - n * n);
                double dr = dan * dir.extra[t][i];
                da[i] = dr * r * (1.0 - r);
                da[H + i] = dz * z * (1.0 - z);
                da[2 * H + i] = dan;
            }
            // a_r, a_z see U h directly; a_n sees r * (U_n h).
            Vec du_h(gate_rows());
            for (std::size_t i = 0; i < H; ++i) {
                du_h[i] = da[i];
                du_h[H + i] = da[H + i];
                du_h[2 * H + i] = da[2 * H + i] * g[i];
            }
            if (grads) {
                outer_acc(dw->data.data(), gate_rows(), input_, da.data(), cache.inputs[t].data());
                for (std::size_t i = 0; i < gate_rows(); ++i) db->data[i] += da[i];
                if (h_prev) outer_acc(du->data.data(), gate_rows(), H, du_h.data(), h_prev->data());
            }
            tmatvec_acc(w.data.data(), gate_rows(), input_, da.data(), d_inputs[t].data());
            if (h_prev) {
                std::fill(dh.begin(), dh.end(), 0.0);
                tmatvec_acc(u.data.data(), gate_rows(), H, du_h.data(), dh.data());
                for (std::size_t i = 0; i < H; ++i) dh[i] += dh_next[i];
            }
        } else {
            for (std::size_t i = 0; i < H; ++i) {
                double gi = g[i], gf = g[H + i], gg = g[2 * H + i], go = g[3 * H + i];
                double c_new = dir.extra[t][H + i];
                double c_prev = dir.extra[t][i];
                double tc = std::tanh(c_new);
                double d_o = dh[i] * tc;
                dc[i] += dh[i] * go * (1.0 - tc * tc);
                double d_i = dc[i] * gg;
                double d_f = dc[i] * c_prev;
                double d_g = dc[i] * gi;
                da[i] = d_i * gi * (1.0 - gi);
                da[H + i] = d_f * gf * (1.0 - gf);
                da[2 * H + i] = d_g * (1.0 - gg * gg);
                da[3 * H + i] = d_o * go * (1.0 - go);
                dc[i] *= gf;
            }
            if (grads) {
                outer_acc(dw->data.data(), gate_rows(), input_, da.data(), cache.inputs[t].data());
                for (std::size_t i = 0; i < gate_rows(); ++i) db->data[i] += da[i];
                if (h_prev) outer_acc(du->data.data(), gate_rows(), H, da.data(), h_prev->data());
            }
            tmatvec_acc(w.data.data(), gate_rows(), input_, da.data(), d_inputs[t].data());
            std::fill(dh.begin(), dh.end(), 0.0);
            if (h_prev) tmatvec_acc(u.data.data(), gate_rows(), H, da.data(), dh.data());
        }
    }
}

std::vector<Vec> BiRnn::backward(const ParameterSet& params, const Cache& cache,
                                 const std::vector<Vec>& d_outputs, ParameterSet* grads) const {
    const std::size_t T = cache.inputs.size();
    if (d_outputs.size() != T) throw std::invalid_argument("BiRnn::backward: gradient length mismatch");
    std::vector<Vec> d_fw(T, Vec(hidden_)), d_bw(T, Vec(hidden_));
    for (std::size_t t = 0; t < T; ++t) {
        std::copy(d_outputs[t].begin(), d_outputs[t].begin() + hidden_, d_fw[t].begin());
        std::copy(d_outputs[t].begin() + hidden_, d_outputs[t].end(), d_bw[t].begin());
    }
    std::vector<Vec> d_inputs(T, Vec(input_, 0.0));
    back_dir(params, ".fw", cache, cache.fw, false, d_fw, d_inputs, grads);
    back_dir(params, ".bw", cache, cache.bw, true, d_bw, d_inputs, grads);
    return d_inputs;
}

// ---------------------------------------------------------------------------
// Embedding

Embedding::Embedding(std::string prefix, std::size_t rows, std::size_t dim)
    : prefix_(std::move(prefix)), rows_(rows), dim_(dim) {
    if (rows_ == 0 || dim_ == 0) throw std::invalid_argument("Embedding: zero dimension");
}

void Embedding::init(ParameterSet& params, RandomStream& rng) const {
    Tensor& t = params.add(prefix_ + ".table", {rows_, dim_});
    init_uniform_fan_in(t, dim_, rng);
}

Vec Embedding::forward(const ParameterSet& params, std::size_t row) const {
    if (row >= rows_) throw std::out_of_range("Embedding: row " + std::to_string(row) + " out of range");
    const Tensor& t = params.at(prefix_ + ".table");
    return Vec(t.data.begin() + row * dim_, t.data.begin() + (row + 1) * dim_);
}

void Embedding::backward(std::size_t row, std::span<const double> d_output, ParameterSet* grads) const {
    if (!grads) return;
    Tensor& t = grads->at(prefix_ + ".table");
    for (std::size_t i = 0; i < dim_; ++i) t.data[row * dim_ + i] += d_output[i];
}

// ---------------------------------------------------------------------------
// Gaussian head

DiagonalGaussian gaussian_from_head(std::span<const double> raw) {
    if (raw.size() % 2 != 0) throw std::invalid_argument("gaussian_from_head: odd head size");
    std::size_t d = raw.size() / 2;
    DiagonalGaussian g;
    g.mean.assign(raw.begin(), raw.begin() + d);
    g.log_variance.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        g.log_variance[i] = kLogVarBound * std::tanh(raw[d + i] / kLogVarBound);
    }
    return g;
}

Vec gaussian_head_backward(std::span<const double> raw, std::span<const double> d_mean,
                           std::span<const double> d_logvar) {
    std::size_t d = raw.size() / 2;
    Vec d_raw(raw.size());
    for (std::size_t i = 0; i < d; ++i) d_raw[i] = d_mean[i];
    for (std::size_t i = 0; i < d; ++i) {
        double t = std::tanh(raw[d + i] / kLogVarBound);
        d_raw[d + i] = d_logvar[i] * (1.0 - t * t);
    }
    return d_raw;
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(const ParameterSet& params, std::vector<std::string> trainable_names, AdamConfig cfg)
    : cfg_(cfg), names_(std::move(trainable_names)) {
    m_.reserve(names_.size());
    v_.reserve(names_.size());
    for (const std::string& n : names_) {
        m_.emplace_back(params.at(n).size(), 0.0);
        v_.emplace_back(params.at(n).size(), 0.0);
    }
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < names_.size(); ++k) {
        Tensor& p = params.at(names_[k]);
        const Tensor& g = grads.at(names_[k]);
        if (g.size() != p.size()) throw std::invalid_argument("Adam: gradient shape mismatch for " + names_[k]);
        Vec& m = m_[k];
        Vec& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g.data[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            double mh = m[i] / bc1;
            double vh = v[i] / bc2;
            p.data[i] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.epsilon);
        }
    }
}

std::vector<std::string> names_with_prefixes(const ParameterSet& params,
                                             std::span<const std::string> prefixes) {
    std::vector<std::string> out;
    for (const std::string& n : params.names()) {
        for (const std::string& p : prefixes) {
            if (n.rfind(p, 0) == 0) {
                out.push_back(n);
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient check

double gradient_check(const std::function<double(const ParameterSet&)>& loss_fn,
                      const ParameterSet& params, const ParameterSet& analytic_grads,
                      RandomStream& rng, const std::vector<std::string>& name_filter,
                      std::size_t min_coords, double fd_step, double floor) {
    std::vector<std::string> names =
        name_filter.empty() ? params.names() : name_filter;
    std::vector<std::pair<std::string, std::size_t>> coords;
    for (const std::string& n : names) {
        for (std::size_t i = 0; i < params.at(n).size(); ++i) coords.emplace_back(n, i);
    }
    if (coords.empty()) throw std::invalid_argument("gradient_check: no coordinates selected");

    std::vector<std::size_t> picked;
    if (coords.size() <= min_coords) {
        picked.resize(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) picked[i] = i;
    } else {
        picked.resize(min_coords);
        for (std::size_t& p : picked) p = rng.uniform_int(coords.size());
    }

    ParameterSet work = params;
    double max_rel = 0.0;
    for (std::size_t idx : picked) {
        const auto& [name, i] = coords[idx];
        double original = work.at(name).data[i];
        work.at(name).data[i] = original + fd_step;
        double lo_plus = loss_fn(work);
        work.at(name).data[i] = original - fd_step;
        double lo_minus = loss_fn(work);
        work.at(name).data[i] = original;
        if (!std::isfinite(lo_plus) || !std::isfinite(lo_minus)) {
            throw std::runtime_error("gradient_check: non-finite loss at " + name);
        }
        double gfd = (lo_plus - lo_minus) / (2.0 * fd_step);
        double ga = analytic_grads.at(name).data[i];
        double rel = std::abs(ga - gfd) / std::max({std::abs(ga), std::abs(gfd), floor});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoints

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts unsupported");

void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params,
                     const std::vector<std::pair<std::string, std::string>>& fields) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
    manifest << "format: spil-checkpoint-v1\n";
    manifest << "dtype: float64\n";
    for (const auto& [k, v] : fields) manifest << k << ": " << v << "\n";
    manifest << "tensor_count: " << params.names().size() << "\n";
    for (const std::string& n : params.names()) {
        manifest << "tensor: " << n;
        for (std::size_t d : params.at(n).shape) manifest << " " << d;
        manifest << "\n";
    }
    manifest.close();

    std::ofstream blob(dir / "params.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write " + (dir / "params.bin").string());
    for (const std::string& n : params.names()) {
        const Vec& v = params.at(n).data;
        blob.write(reinterpret_cast<const char*>(v.data()),
                   static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
}

ParameterSet load_checkpoint(const std::filesystem::path& dir,
                             std::vector<std::pair<std::string, std::string>>* fields) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot read " + (dir / "manifest.txt").string());
    ParameterSet params;
    std::string line;
    std::vector<std::string> order;
    while (std::getline(manifest, line)) {
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (key == "tensor") {
            std::istringstream ss(value);
            std::string name;
            ss >> name;
            std::vector<std::size_t> shape;
            std::size_t d;
            while (ss >> d) shape.push_back(d);
            params.add(name, shape);
            order.push_back(name);
        } else if (key != "format" && key != "dtype" && key != "tensor_count" && fields) {
            fields->emplace_back(key, value);
        }
    }

    std::ifstream blob(dir / "params.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("cannot read " + (dir / "params.bin").string());
    for (const std::string& n : order) {
        Vec& v = params.at(n).data;
        blob.read(reinterpret_cast<char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!blob) throw std::runtime_error("checkpoint blob truncated at tensor " + n);
    }
    char extra;
    if (blob.read(&extra, 1)) throw std::runtime_error("checkpoint blob longer than manifest declares");
    return params;
}

std::string checkpoint_field(const std::vector<std::pair<std::string, std::string>>& fields,
                             const std::string& key) {
    for (const auto& [k, v] : fields)
        if (k == key) return v;
    throw std::out_of_range("checkpoint field missing: " + key);
}

}  // namespace spil
