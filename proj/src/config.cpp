#include "sgdlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sgdlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(last);
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw ConfigError(where + ": " + msg);
}

double parse_double(const std::string& where, const std::string& key, const std::string& v) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        fail(where, "key '" + key + "': cannot parse '" + v + "' as a number");
    return x;
}

std::uint64_t parse_u64(const std::string& where, const std::string& key, const std::string& v) {
    if (v.empty() || v[0] == '-')
        fail(where, "key '" + key + "': cannot parse '" + v + "' as a non-negative integer");
    const char* begin = v.c_str();
    char* end = nullptr;
    const unsigned long long x = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0')
        fail(where, "key '" + key + "': cannot parse '" + v + "' as a non-negative integer");
    return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& where, const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(where, "key '" + key + "': expected 'true' or 'false', got '" + v + "'");
}

std::string parse_enum(const std::string& where, const std::string& key, const std::string& v,
                       const std::vector<std::string>& allowed) {
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return v;
    std::string opts;
    for (const auto& a : allowed) opts += (opts.empty() ? "" : " | ") + a;
    fail(where, "key '" + key + "': invalid value '" + v + "' (allowed: " + opts + ")");
}

std::vector<std::size_t> parse_size_list(const std::string& where, const std::string& key,
                                         const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v))
        out.push_back(static_cast<std::size_t>(parse_u64(where, key, item)));
    return out;
}

const std::set<std::string> kMetricNames = {"w1-min-abs", "tail-gram-trace", "balance-gap",
                                            "toy-ab"};

// One row per key: dotted name, default, description. This table is the
// authoritative key list; apply_config_key and the parsers reject anything
// not named here.
struct KeyDoc {
    const char* key;
    const char* def;
    const char* doc;
};

const std::vector<KeyDoc>& key_docs() {
    static const std::vector<KeyDoc> docs = {
        {"dataset.source", "synthetic",
         "data generator: synthetic | diag-misspec | toy | idx"},
        {"dataset.d", "8", "input width (synthetic, diag-misspec)"},
        {"dataset.r", "2", "relevant coordinates; the first r input columns carry the labels"},
        {"dataset.m", "64", "base sample count (synthetic emits 2m paired rows)"},
        {"dataset.target", "linear-sum", "synthetic labels: linear-sum | sine-of-sum"},
        {"dataset.eps", "0", "synthetic paired label perturbation scale"},
        {"dataset.noise", "0.5",
         "diag-misspec: residual scale on irrelevant components (zero-mean, orthogonal to x)"},
        {"dataset.seed", "1", "data sampling seed"},
        {"dataset.toy", "d1", "toy variant: d1 {(1,-1),(1,1)} | d2 {(1,0),(3,0)}"},
        {"dataset.idx_images", "", "idx: image file path"},
        {"dataset.idx_labels", "", "idx: label file path"},
        {"dataset.idx_center", "true", "idx: subtract per-column input means"},
        {"network.topology", "dense", "dense | diagonal"},
        {"network.activation", "identity", "identity | relu"},
        {"network.widths", "8,4,1",
         "dense layer widths from input to output, comma separated"},
        {"network.depth", "2", "diagonal chain length (width is taken from the data)"},
        {"network.init", "kaiming-normal",
         "weight init: kaiming-normal | kaiming-uniform | iid-normal"},
        {"network.init_scale", "1", "iid-normal standard deviation"},
        {"network.seed", "2", "weight init seed"},
        {"optimizer.algorithm", "gd", "gd | sgd-with | sgd-without"},
        {"optimizer.eta", "0.01", "step size (must be > 0)"},
        {"optimizer.batch_size", "1", "minibatch size for the sgd algorithms"},
        {"optimizer.weight_decay", "0", "decoupled weight decay coefficient"},
        {"optimizer.steps", "100", "number of updates; 0 writes a header-only CSV"},
        {"optimizer.seed", "3", "batch sampling / shuffling seed"},
        {"probes.stride", "1", "record every stride-th step (plus a final full-data record)"},
        {"probes.check_eta_max", "false",
         "warn on stderr when eta exceeds the curvature-based stability bound"},
        {"probes.metrics", "",
         "extra CSV columns: w1-min-abs | tail-gram-trace | balance-gap | toy-ab"},
        {"probes.irrelevant", "auto",
         "irrelevant input coordinates: auto (dataset ground truth) | none | comma list"},
        {"output.dir", "", "output directory; empty uses $SGDLAB_OUT, then ./out"},
        {"output.formats", "csv,json", "outputs to write, subset of: csv,json"},
    };
    return docs;
}

const std::vector<KeyDoc>& sweep_key_docs() {
    static const std::vector<KeyDoc> docs = {
        {"sweep.axis.<config key>", "-",
         "one sweep axis: comma-separated values applied to the named key"},
        {"sweep.seeds", "1",
         "replicate seeds; each sets optimizer.seed = s and network.seed = s + 1000003"},
        {"sweep.cap", "256", "maximum number of cartesian cells"},
        {"sweep.fit", "none",
         "none | scaling (fit log steps-to-threshold against log(batch/eta^2); requires "
         "exactly the optimizer.eta and optimizer.batch_size axes)"},
        {"sweep.fit_threshold", "0.001",
         "threshold as a fraction of the initial first-layer irrelevant norm"},
    };
    return docs;
}

std::vector<std::string> section_keys(const std::string& section) {
    std::vector<std::string> out;
    const std::string prefix = section + ".";
    for (const auto& d : key_docs())
        if (std::string(d.key).rfind(prefix, 0) == 0) out.push_back(d.key + prefix.size());
    return out;
}

void validate_irrelevant_list(const std::string& where, const std::string& v) {
    if (v == "auto" || v == "none") return;
    const auto items = split_list(v);
    if (items.empty())
        fail(where, "key 'probes.irrelevant': expected 'auto', 'none', or a coordinate list");
    for (const auto& item : items) parse_u64(where, "probes.irrelevant", item);
}

}  // namespace

void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& where) {
    auto& ds = cfg.dataset;
    auto& net = cfg.network;
    auto& opt = cfg.optimizer;
    auto& pr = cfg.probes;
    auto& out = cfg.output;

    if (key == "dataset.source")
        ds.source = parse_enum(where, key, value, {"synthetic", "diag-misspec", "toy", "idx"});
    else if (key == "dataset.d")
        ds.d = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "dataset.r")
        ds.r = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "dataset.m")
        ds.m = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "dataset.target")
        ds.target = parse_enum(where, key, value, {"linear-sum", "sine-of-sum"});
    else if (key == "dataset.eps")
        ds.eps = parse_double(where, key, value);
    else if (key == "dataset.noise")
        ds.noise = parse_double(where, key, value);
    else if (key == "dataset.seed")
        ds.seed = parse_u64(where, key, value);
    else if (key == "dataset.toy")
        ds.toy = parse_enum(where, key, value, {"d1", "d2"});
    else if (key == "dataset.idx_images")
        ds.idx_images = value;
    else if (key == "dataset.idx_labels")
        ds.idx_labels = value;
    else if (key == "dataset.idx_center")
        ds.idx_center = parse_bool(where, key, value);
    else if (key == "network.topology")
        net.topology = parse_enum(where, key, value, {"dense", "diagonal"});
    else if (key == "network.activation")
        net.activation = parse_enum(where, key, value, {"identity", "relu"});
    else if (key == "network.widths") {
        net.widths = parse_size_list(where, key, value);
        if (net.widths.size() < 2)
            fail(where, "key 'network.widths': need at least input and output widths");
    } else if (key == "network.depth")
        net.depth = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "network.init")
        net.init = parse_enum(where, key, value,
                              {"kaiming-normal", "kaiming-uniform", "iid-normal"});
    else if (key == "network.init_scale")
        net.init_scale = parse_double(where, key, value);
    else if (key == "network.seed")
        net.seed = parse_u64(where, key, value);
    else if (key == "optimizer.algorithm")
        opt.algorithm = parse_enum(where, key, value, {"gd", "sgd-with", "sgd-without"});
    else if (key == "optimizer.eta")
        opt.eta = parse_double(where, key, value);
    else if (key == "optimizer.batch_size")
        opt.batch_size = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "optimizer.weight_decay")
        opt.weight_decay = parse_double(where, key, value);
    else if (key == "optimizer.steps")
        opt.steps = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "optimizer.seed")
        opt.seed = parse_u64(where, key, value);
    else if (key == "probes.stride")
        pr.stride = static_cast<std::size_t>(parse_u64(where, key, value));
    else if (key == "probes.check_eta_max")
        pr.check_eta_max = parse_bool(where, key, value);
    else if (key == "probes.metrics") {
        pr.metrics = split_list(value);
        for (const auto& m : pr.metrics)
            if (!kMetricNames.count(m)) {
                std::string opts;
                for (const auto& n : kMetricNames) opts += (opts.empty() ? "" : ", ") + n;
                fail(where, "key 'probes.metrics': unknown metric '" + m + "' (known: " +
                                opts + ")");
            }
    } else if (key == "probes.irrelevant") {
        validate_irrelevant_list(where, value);
        pr.irrelevant = value;
    } else if (key == "output.dir")
        out.dir = value;
    else if (key == "output.formats") {
        out.formats = split_list(value);
        for (const auto& f : out.formats)
            if (f != "csv" && f != "json")
                fail(where, "key 'output.formats': unknown format '" + f +
                                "' (allowed: csv, json)");
    } else {
        const auto dot = key.find('.');
        const std::string section = dot == std::string::npos ? key : key.substr(0, dot);
        std::string known;
        for (const auto& k : section_keys(section)) known += (known.empty() ? "" : ", ") + k;
        if (known.empty())
            fail(where, "unknown key '" + key + "'");
        fail(where, "unknown key '" + key + "' in [" + section + "] (known: " + known + ")");
    }
}

namespace {

// Shared line loop for both file kinds. on_kv is called with the dotted key;
// returns false when the key belongs to a section the caller doesn't accept.
void parse_flat(const std::string& text, const std::string& origin,
                const std::set<std::string>& sections,
                const std::function<void(const std::string& dotted, const std::string& value,
                                         const std::string& where)>& on_kv) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::set<std::string> seen;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(where, "malformed section header '" + t + "'");
            section = trim(t.substr(1, t.size() - 2));
            if (!sections.count(section)) {
                std::string known;
                for (const auto& s : sections) known += (known.empty() ? "" : ", ") + s;
                fail(where, "unknown section [" + section + "] (known: " + known + ")");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(where, "expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) fail(where, "empty key");
        if (section.empty())
            fail(where, "key '" + key + "' appears before any [section] header");
        const std::string dotted = section + "." + key;
        if (!seen.insert(dotted).second)
            fail(where, "duplicate key '" + dotted + "'");
        on_kv(dotted, value, where);
    }
}

void apply_sweep_key(SweepSpec& sw, const std::string& dotted, const std::string& value,
                     const std::string& where) {
    const std::string key = dotted.substr(std::string("sweep.").size());
    if (key.rfind("axis.", 0) == 0) {
        SweepAxis axis;
        axis.key = key.substr(std::string("axis.").size());
        axis.values = split_list(value);
        if (axis.values.empty())
            fail(where, "key '" + dotted + "': axis needs at least one value");
        if (axis.key.rfind("output.", 0) == 0)
            fail(where, "key '" + dotted + "': cannot sweep over output keys");
        for (const auto& a : sw.axes)
            if (a.key == axis.key)
                fail(where, "key '" + dotted + "': duplicate axis");
        sw.axes.push_back(std::move(axis));
    } else if (key == "seeds") {
        sw.seeds.clear();
        for (const auto& item : split_list(value))
            sw.seeds.push_back(parse_u64(where, dotted, item));
        if (sw.seeds.empty()) fail(where, "key 'sweep.seeds': need at least one seed");
    } else if (key == "cap") {
        sw.cap = static_cast<std::size_t>(parse_u64(where, dotted, value));
        if (sw.cap == 0) fail(where, "key 'sweep.cap': must be positive");
    } else if (key == "fit") {
        sw.fit = parse_enum(where, dotted, value, {"none", "scaling"});
    } else if (key == "fit_threshold") {
        sw.fit_threshold = parse_double(where, dotted, value);
        if (!(sw.fit_threshold > 0.0 && sw.fit_threshold < 1.0))
            fail(where, "key 'sweep.fit_threshold': must lie in (0, 1)");
    } else {
        fail(where, "unknown key '" + dotted +
                        "' in [sweep] (known: axis.<config key>, seeds, cap, fit, "
                        "fit_threshold)");
    }
}

void validate_sweep(SweepSpec& sw, const std::string& origin) {
    std::size_t cells = 1;
    for (const auto& axis : sw.axes) {
        cells *= axis.values.size();  // cells stays <= cap, so this cannot overflow
        if (cells > sw.cap)
            fail(origin, "sweep cartesian size exceeds cap " + std::to_string(sw.cap));
    }
    // Vet every cell: axis keys must exist and every value must parse, and the
    // combined per-cell config has to pass the cross-field checks.
    std::vector<std::size_t> idx(sw.axes.size(), 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        ExperimentConfig cfg = sw.base;
        std::size_t rest = cell;
        for (std::size_t a = 0; a < sw.axes.size(); ++a) {
            const auto& axis = sw.axes[a];
            const std::size_t pick = rest % axis.values.size();
            rest /= axis.values.size();
            apply_config_key(cfg, axis.key, axis.values[pick],
                             origin + ": sweep axis '" + axis.key + "'");
        }
        validate_experiment_config(cfg, origin + ": sweep cell " + std::to_string(cell));
    }
    if (sw.fit == "scaling") {
        const auto has = [&](const std::string& k) {
            for (const auto& a : sw.axes)
                if (a.key == k) return true;
            return false;
        };
        if (sw.axes.size() != 2 || !has("optimizer.eta") || !has("optimizer.batch_size"))
            fail(origin,
                 "sweep.fit = scaling requires exactly the optimizer.eta and "
                 "optimizer.batch_size axes");
    }
}

const std::set<std::string> kExperimentSections = {"dataset", "network", "optimizer", "probes",
                                                   "output"};

bool looks_like_json(const std::string& text) {
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{';
    }
    return false;
}

std::string scalar_to_string(const ordered_json& v, const std::string& where,
                             const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    if (v.is_array()) {
        std::string joined;
        for (const auto& item : v) {
            if (item.is_object() || item.is_array() || item.is_null())
                fail(where, "key '" + key + "': array entries must be scalars");
            joined += (joined.empty() ? "" : ",") + scalar_to_string(item, where, key);
        }
        return joined;
    }
    fail(where, "key '" + key + "': expected a scalar or array value");
}

ordered_json parse_json_or_fail(const std::string& text, const std::string& origin) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(origin, "invalid JSON");
    if (!j.is_object()) fail(origin, "top level must be a JSON object");
    return j;
}

void walk_json_sections(const ordered_json& j, const std::string& origin,
                        const std::set<std::string>& sections,
                        const std::function<void(const std::string&, const std::string&)>& on_kv) {
    for (const auto& [section, body] : j.items()) {
        if (!sections.count(section)) {
            std::string known;
            for (const auto& s : sections) known += (known.empty() ? "" : ", ") + s;
            fail(origin, "unknown section '" + section + "' (known: " + known + ")");
        }
        if (section == "sweep") continue;  // handled by the sweep loader
        if (!body.is_object())
            fail(origin, "section '" + section + "' must be a JSON object");
        for (const auto& [key, value] : body.items()) {
            const std::string dotted = section + "." + key;
            on_kv(dotted, scalar_to_string(value, origin, dotted));
        }
    }
}

ExperimentConfig parse_experiment_json(const std::string& text, const std::string& origin) {
    const ordered_json j = parse_json_or_fail(text, origin);
    ExperimentConfig cfg;
    walk_json_sections(j, origin, kExperimentSections,
                       [&](const std::string& dotted, const std::string& value) {
                           apply_config_key(cfg, dotted, value, origin);
                       });
    validate_experiment_config(cfg, origin);
    return cfg;
}

SweepSpec parse_sweep_json(const std::string& text, const std::string& origin) {
    const ordered_json j = parse_json_or_fail(text, origin);
    SweepSpec sw;
    auto sections = kExperimentSections;
    sections.insert("sweep");
    walk_json_sections(j, origin, sections,
                       [&](const std::string& dotted, const std::string& value) {
                           apply_config_key(sw.base, dotted, value, origin);
                       });
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        if (!s.is_object()) fail(origin, "section 'sweep' must be a JSON object");
        for (const auto& [key, value] : s.items()) {
            if (key == "axes") {
                if (!value.is_object())
                    fail(origin, "sweep.axes must map config keys to value arrays");
                for (const auto& [axis_key, vals] : value.items())
                    apply_sweep_key(sw, "sweep.axis." + axis_key,
                                    scalar_to_string(vals, origin, "sweep.axes." + axis_key),
                                    origin);
            } else {
                apply_sweep_key(sw, "sweep." + key, scalar_to_string(value, origin, key),
                                origin);
            }
        }
    }
    validate_experiment_config(sw.base, origin);
    validate_sweep(sw, origin);
    return sw;
}

std::string read_file_or_fail(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
    if (looks_like_json(text)) return parse_experiment_json(text, origin);
    ExperimentConfig cfg;
    parse_flat(text, origin, kExperimentSections,
               [&](const std::string& dotted, const std::string& value,
                   const std::string& where) { apply_config_key(cfg, dotted, value, where); });
    validate_experiment_config(cfg, origin);
    return cfg;
}

SweepSpec parse_sweep_spec(const std::string& text, const std::string& origin) {
    if (looks_like_json(text)) return parse_sweep_json(text, origin);
    SweepSpec sw;
    auto sections = kExperimentSections;
    sections.insert("sweep");
    parse_flat(text, origin, sections,
               [&](const std::string& dotted, const std::string& value,
                   const std::string& where) {
                   if (dotted.rfind("sweep.", 0) == 0)
                       apply_sweep_key(sw, dotted, value, where);
                   else
                       apply_config_key(sw.base, dotted, value, where);
               });
    validate_experiment_config(sw.base, origin);
    validate_sweep(sw, origin);
    return sw;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file_or_fail(path), path);
}

SweepSpec load_sweep_spec(const std::string& path) {
    return parse_sweep_spec(read_file_or_fail(path), path);
}

void validate_experiment_config(const ExperimentConfig& cfg, const std::string& origin) {
    const auto& ds = cfg.dataset;
    const auto& net = cfg.network;
    const auto& opt = cfg.optimizer;

    if (ds.source == "synthetic" || ds.source == "diag-misspec") {
        if (ds.d < 1) fail(origin, "dataset.d must be positive");
        if (ds.r < 1 || ds.r > ds.d)
            fail(origin, "dataset.r must satisfy 1 <= r <= d");
        if (ds.m < 2) fail(origin, "dataset.m must be at least 2");
    }
    if (ds.source == "idx") {
        if (ds.idx_images.empty() || ds.idx_labels.empty())
            fail(origin, "dataset.source = idx requires dataset.idx_images and "
                         "dataset.idx_labels");
    }

    // Input/output widths implied by the dataset, when known before loading.
    std::size_t in_w = 0, out_w = 0;
    if (ds.source == "synthetic") {
        in_w = ds.d;
        out_w = 1;
    } else if (ds.source == "diag-misspec") {
        in_w = ds.d;
        out_w = ds.d;
    } else if (ds.source == "toy") {
        in_w = 1;
        out_w = 1;
    }

    if (net.topology == "dense") {
        if (net.widths.size() < 2)
            fail(origin, "network.widths needs at least input and output entries");
        for (std::size_t w : net.widths)
            if (w == 0) fail(origin, "network.widths entries must be positive");
        if (in_w != 0 && net.widths.front() != in_w)
            fail(origin, "network.widths input " + std::to_string(net.widths.front()) +
                             " does not match the dataset input width " +
                             std::to_string(in_w));
        if (out_w != 0 && net.widths.back() != out_w)
            fail(origin, "network.widths output " + std::to_string(net.widths.back()) +
                             " does not match the dataset label width " +
                             std::to_string(out_w));
    } else {  // diagonal
        if (net.depth < 1) fail(origin, "network.depth must be at least 1");
        if (in_w != 0 && out_w != 0 && in_w != out_w)
            fail(origin, "diagonal networks need matching input and label widths; dataset '" +
                             ds.source + "' provides " + std::to_string(in_w) + " -> " +
                             std::to_string(out_w));
    }

    if (!(opt.eta > 0.0)) fail(origin, "optimizer.eta must be positive");
    if (opt.weight_decay < 0.0) fail(origin, "optimizer.weight_decay must be non-negative");
    if (opt.batch_size < 1) fail(origin, "optimizer.batch_size must be at least 1");
    if (cfg.probes.stride < 1) fail(origin, "probes.stride must be at least 1");

    for (const auto& m : cfg.probes.metrics) {
        if ((m == "balance-gap" || m == "toy-ab") && net.topology != "diagonal")
            fail(origin, "probes.metrics '" + m + "' needs a diagonal network");
        if (m == "toy-ab") {
            if (net.depth != 2)
                fail(origin, "probes.metrics 'toy-ab' needs a depth-2 diagonal network");
            if (in_w != 0 && in_w != 1)
                fail(origin, "probes.metrics 'toy-ab' needs a single-component network");
        }
    }

    if (cfg.probes.irrelevant != "auto" && cfg.probes.irrelevant != "none" && in_w != 0) {
        for (const auto& item : split_list(cfg.probes.irrelevant)) {
            const std::uint64_t c = parse_u64(origin, "probes.irrelevant", item);
            if (c >= in_w)
                fail(origin, "probes.irrelevant coordinate " + item +
                                 " is out of range for input width " + std::to_string(in_w));
        }
    }
}

void apply_replicate_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.optimizer.seed = seed;
    cfg.network.seed = seed + 1000003;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {{"source", cfg.dataset.source},
                    {"d", cfg.dataset.d},
                    {"r", cfg.dataset.r},
                    {"m", cfg.dataset.m},
                    {"target", cfg.dataset.target},
                    {"eps", cfg.dataset.eps},
                    {"noise", cfg.dataset.noise},
                    {"seed", cfg.dataset.seed},
                    {"toy", cfg.dataset.toy},
                    {"idx_images", cfg.dataset.idx_images},
                    {"idx_labels", cfg.dataset.idx_labels},
                    {"idx_center", cfg.dataset.idx_center}};
    j["network"] = {{"topology", cfg.network.topology},
                    {"activation", cfg.network.activation},
                    {"widths", cfg.network.widths},
                    {"depth", cfg.network.depth},
                    {"init", cfg.network.init},
                    {"init_scale", cfg.network.init_scale},
                    {"seed", cfg.network.seed}};
    j["optimizer"] = {{"algorithm", cfg.optimizer.algorithm},
                      {"eta", cfg.optimizer.eta},
                      {"batch_size", cfg.optimizer.batch_size},
                      {"weight_decay", cfg.optimizer.weight_decay},
                      {"steps", cfg.optimizer.steps},
                      {"seed", cfg.optimizer.seed}};
    j["probes"] = {{"stride", cfg.probes.stride},
                   {"check_eta_max", cfg.probes.check_eta_max},
                   {"metrics", cfg.probes.metrics},
                   {"irrelevant", cfg.probes.irrelevant}};
    j["output"] = {{"dir", cfg.output.dir}, {"formats", cfg.output.formats}};
    return j.dump(2);
}

std::string config_reference() {
    std::ostringstream out;
    out << "Config keys (flat format: [section] headers with key = value lines; '#' starts\n"
           "a comment line; the same keys nest as JSON objects when the file starts with\n"
           "'{'). Every key is optional and defaults as listed. Unknown keys, unknown\n"
           "sections, and duplicate keys are errors.\n\n";
    std::string section;
    for (const auto& d : key_docs()) {
        const std::string key = d.key;
        const std::string sec = key.substr(0, key.find('.'));
        if (sec != section) {
            section = sec;
            out << "[" << section << "]\n";
        }
        out << "  " << key.substr(sec.size() + 1) << " (default: "
            << (d.def[0] ? d.def : "empty") << ") - " << d.doc << "\n";
    }
    out << "[sweep]  (sweep files only)\n";
    for (const auto& d : sweep_key_docs()) {
        const std::string key = d.key + std::string("sweep.").size();
        out << "  " << key << " (default: " << (d.def[0] ? d.def : "empty") << ") - " << d.doc
            << "\n";
    }
    return out.str();
}

}  // namespace sgdlab
