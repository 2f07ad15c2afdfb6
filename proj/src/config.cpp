#include "spil/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "spil/nn.hpp"

namespace spil {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters in number: " + v);
    return d;
}

std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw std::invalid_argument("not an unsigned integer: " + v);
    }
    return out;
}

struct Entry {
    std::string key;
    std::function<void(SpilConfig&, const std::string&)> set;
    std::function<std::string(const SpilConfig&)> get;
};

template <typename T>
Entry make_entry(const std::string& key, T SpilConfig::* member) {
    return Entry{
        key,
        [member](SpilConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, double>) {
                c.*member = parse_double(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                c.*member = v;
            } else {
                c.*member = static_cast<T>(parse_u64(v));
            }
        },
        [member](const SpilConfig& c) {
            if constexpr (std::is_same_v<T, double>) {
                return format_double(c.*member);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return c.*member;
            } else {
                return std::to_string(c.*member);
            }
        }};
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        make_entry("seed", &SpilConfig::seed),
        make_entry("n_h", &SpilConfig::n_h),
        make_entry("n_z", &SpilConfig::n_z),
        make_entry("k_slots", &SpilConfig::k_slots),
        make_entry("w_translation", &SpilConfig::w_translation),
        make_entry("w_rotation", &SpilConfig::w_rotation),
        make_entry("w_grasping", &SpilConfig::w_grasping),
        make_entry("huber_delta", &SpilConfig::huber_delta),
        make_entry("beta1", &SpilConfig::beta1),
        make_entry("beta2", &SpilConfig::beta2),
        make_entry("gamma1", &SpilConfig::gamma1),
        make_entry("gamma2", &SpilConfig::gamma2),
        make_entry("prior_translation", &SpilConfig::prior_translation),
        make_entry("prior_rotation", &SpilConfig::prior_rotation),
        make_entry("prior_grasping", &SpilConfig::prior_grasping),
        make_entry("learning_rate", &SpilConfig::learning_rate),
        make_entry("batch_size", &SpilConfig::batch_size),
        make_entry("vae_steps", &SpilConfig::vae_steps),
        make_entry("spil_steps", &SpilConfig::spil_steps),
        make_entry("p_aug", &SpilConfig::p_aug),
        make_entry("enc_hidden", &SpilConfig::enc_hidden),
        make_entry("dec_hidden", &SpilConfig::dec_hidden),
        make_entry("loc_hidden", &SpilConfig::loc_hidden),
        make_entry("ctx_hidden", &SpilConfig::ctx_hidden),
        make_entry("ctx_dim", &SpilConfig::ctx_dim),
        make_entry("rnn_hidden", &SpilConfig::rnn_hidden),
        make_entry("rnn_cell", &SpilConfig::rnn_cell),
        make_entry("n_episodes", &SpilConfig::n_episodes),
        make_entry("episode_length", &SpilConfig::episode_length),
        make_entry("lang_fraction", &SpilConfig::lang_fraction),
        make_entry("expert_noise", &SpilConfig::expert_noise),
        make_entry("n_chains", &SpilConfig::n_chains),
        make_entry("task_budget", &SpilConfig::task_budget),
        make_entry("n_rollouts", &SpilConfig::n_rollouts),
    };
    return table;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void SpilConfig::validate() const {
    if (n_h < 3) throw std::invalid_argument("n_h must be at least 3 (augmentation zeroes three actions)");
    if (n_z == 0 || k_slots == 0) throw std::invalid_argument("n_z and k_slots must be positive");
    if (!(w_translation > 0 && w_rotation > 0 && w_grasping > 0)) {
        throw std::invalid_argument("magic weights must be positive");
    }
    if (!(huber_delta > 0)) throw std::invalid_argument("huber_delta must be positive");
    if (!(lang_fraction >= 0.0 && lang_fraction <= 1.0)) {
        throw std::invalid_argument("lang_fraction must be in [0, 1]");
    }
    if (!(p_aug >= 0.0 && p_aug <= 1.0)) throw std::invalid_argument("p_aug must be in [0, 1]");
    double psum = prior_translation + prior_rotation + prior_grasping;
    if (std::abs(psum - 1.0) > 1e-9) throw std::invalid_argument("prior_y must sum to 1");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (k_slots * n_h > episode_length) {
        throw std::invalid_argument("window k_slots * n_h exceeds episode_length");
    }
    rnn_cell_from_string(rnn_cell);  // throws on unknown flavor
}

void apply_config_entry(const std::string& key, const std::string& value, SpilConfig& cfg) {
    for (const Entry& e : entries()) {
        if (e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("unknown config key: " + key);
}

void load_config_file(const std::filesystem::path& path, SpilConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        }
        apply_config_entry(trim(s.substr(0, eq)), trim(s.substr(eq + 1)), cfg);
    }
}

std::string serialize_config(const SpilConfig& cfg) {
    std::ostringstream out;
    for (const Entry& e : entries()) out << e.key << " = " << e.get(cfg) << "\n";
    return out.str();
}

std::uint64_t config_hash(const SpilConfig& cfg) {
    std::string s = serialize_config(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const SpilConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return std::string(buf);
}

}  // namespace spil
