#include "salforge/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "salforge/errors.hpp"

namespace salforge {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": bad number '" + v + "'");
    }
}

std::int64_t to_int(const std::string& v, const std::string& where) {
    std::int64_t i = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(where + ": bad integer '" + v + "'");
    return i;
}

std::uint64_t to_uint(const std::string& v, const std::string& where) {
    std::uint64_t i = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(where + ": bad unsigned integer '" + v + "'");
    return i;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config c;
    // setter table doubles as the list of known keys
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
        {"data.n_input", [&](const std::string& v, const std::string& w) { c.data.n_input = to_int(v, w); }},
        {"data.n_near", [&](const std::string& v, const std::string& w) { c.data.n_near = to_int(v, w); }},
        {"data.n_uniform", [&](const std::string& v, const std::string& w) { c.data.n_uniform = to_int(v, w); }},
        {"data.sigma_small", [&](const std::string& v, const std::string& w) { c.data.sigma_small = to_double(v, w); }},
        {"data.sigma_large", [&](const std::string& v, const std::string& w) { c.data.sigma_large = to_double(v, w); }},
        {"model.arch", [&](const std::string& v, const std::string&) { c.train.arch = v; }},
        {"model.init", [&](const std::string& v, const std::string&) { c.train.init = v; }},
        {"train.lr0", [&](const std::string& v, const std::string& w) { c.train.lr0 = to_double(v, w); }},
        {"train.batch_size", [&](const std::string& v, const std::string& w) { c.train.batch_size = to_int(v, w); }},
        {"train.points_per_shape", [&](const std::string& v, const std::string& w) { c.train.points_per_shape = to_int(v, w); }},
        {"train.epochs", [&](const std::string& v, const std::string& w) { c.train.epochs = to_int(v, w); }},
        {"train.schedule_period", [&](const std::string& v, const std::string& w) { c.train.schedule_period = to_int(v, w); }},
        {"train.schedule_factor", [&](const std::string& v, const std::string& w) { c.train.schedule_factor = to_double(v, w); }},
        {"train.kl_weight", [&](const std::string& v, const std::string& w) { c.train.kl_weight = to_double(v, w); }},
        {"train.seed", [&](const std::string& v, const std::string& w) { c.train.seed = to_uint(v, w); }},
        {"train.mode", [&](const std::string& v, const std::string&) { c.train.mode = v; }},
        {"train.checkpoint_every", [&](const std::string& v, const std::string& w) { c.train.checkpoint_every = to_int(v, w); }},
        {"reconstruct.resolution", [&](const std::string& v, const std::string& w) { c.reconstruct.resolution = to_int(v, w); }},
        {"reconstruct.bound", [&](const std::string& v, const std::string& w) { c.reconstruct.bound = to_double(v, w); }},
    };

    std::istringstream is(text);
    std::string raw, section;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "data" && section != "model" && section != "train" &&
                section != "reconstruct")
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        auto it = setters.find(full);
        if (it == setters.end()) throw ConfigError(where + ": unknown key '" + full + "'");
        it->second(value, where);
    }
    c.validate();
    return c;
}

std::string Config::dump() const {
    std::ostringstream os;
    os << "[data]\n";
    os << "n_input = " << data.n_input << "\n";
    os << "n_near = " << data.n_near << "\n";
    os << "n_uniform = " << data.n_uniform << "\n";
    os << "sigma_small = " << fmt_double(data.sigma_small) << "\n";
    os << "sigma_large = " << fmt_double(data.sigma_large) << "\n";
    os << "\n[model]\n";
    os << "arch = " << train.arch << "\n";
    os << "init = " << train.init << "\n";
    os << "\n[train]\n";
    os << "lr0 = " << fmt_double(train.lr0) << "\n";
    os << "batch_size = " << train.batch_size << "\n";
    os << "points_per_shape = " << train.points_per_shape << "\n";
    os << "epochs = " << train.epochs << "\n";
    os << "schedule_period = " << train.schedule_period << "\n";
    os << "schedule_factor = " << fmt_double(train.schedule_factor) << "\n";
    os << "kl_weight = " << fmt_double(train.kl_weight) << "\n";
    os << "seed = " << train.seed << "\n";
    os << "mode = " << train.mode << "\n";
    os << "checkpoint_every = " << train.checkpoint_every << "\n";
    os << "\n[reconstruct]\n";
    os << "resolution = " << reconstruct.resolution << "\n";
    os << "bound = " << fmt_double(reconstruct.bound) << "\n";
    return os.str();
}

void Config::validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (data.n_input < 1) bad("n_input must be >= 1");
    if (data.n_near < 0) bad("n_near must be >= 0");
    if (data.n_uniform < 0) bad("n_uniform must be >= 0");
    if (data.n_near + data.n_uniform < 1) bad("query budget must be >= 1");
    if (data.sigma_small < 0 || data.sigma_large < 0) bad("sigmas must be >= 0");
    if (!(train.lr0 > 0)) bad("lr0 must be > 0");
    if (train.batch_size < 1) bad("batch_size must be >= 1");
    if (train.points_per_shape < 1) bad("points_per_shape must be >= 1");
    if (train.epochs < 1) bad("epochs must be >= 1");
    if (train.schedule_period < 1) bad("schedule_period must be >= 1");
    if (!(train.schedule_factor > 0) || train.schedule_factor > 1)
        bad("schedule_factor must be in (0, 1]");
    if (train.kl_weight < 0) bad("kl_weight must be >= 0");
    if (train.arch != "lightsal" && train.arch != "sal-baseline")
        bad("unknown arch '" + train.arch + "' (want lightsal or sal-baseline)");
    if (train.init != "scaled-uniform" && train.init != "geometric-sphere")
        bad("unknown init '" + train.init + "' (want scaled-uniform or geometric-sphere)");
    if (train.mode != "autoencoder" && train.mode != "decoder-only")
        bad("unknown mode '" + train.mode + "' (want autoencoder or decoder-only)");
    if (train.checkpoint_every < 1) bad("checkpoint_every must be >= 1");
    if (reconstruct.resolution < 2) bad("resolution must be >= 2");
    if (!(reconstruct.bound > 0)) bad("bound must be > 0");
}

}  // namespace salforge
