#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "noisy_ood/error.hpp"
#include "noisy_ood/experiment.hpp"

namespace noisy_ood {

using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers its path for error messages
// and rejects keys it was never asked about.
class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
        if (!value_.is_object()) fail(path_, "expected an object");
    }

    ~Node() = default;

    bool has(const std::string& key) {
        seen_.insert(key);
        return value_.contains(key);
    }

    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const std::string& key) const { return value_.at(key); }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = value_.at(key);
        if (!v.is_number()) fail(child_path(key), "expected a number");
        return v.get<double>();
    }

    double number_in(const std::string& key, double fallback, double lo, double hi) {
        const double v = number(key, fallback);
        if (!(v >= lo && v <= hi)) {
            std::ostringstream msg;
            msg << "must be in [" << lo << ", " << hi << "], got " << v;
            fail(child_path(key), msg.str());
        }
        return v;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
        if (!has(key)) return fallback;
        const json& v = value_.at(key);
        if (!v.is_number_integer()) fail(child_path(key), "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi) {
            fail(child_path(key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                                      std::to_string(x));
        }
        return x;
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = value_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(child_path(key), "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = value_.at(key);
        if (!v.is_boolean()) fail(child_path(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = value_.at(key);
        if (!v.is_string()) fail(child_path(key), "expected a string");
        return v.get<std::string>();
    }

    const json* array(const std::string& key) {
        if (!has(key)) return nullptr;
        const json& v = value_.at(key);
        if (!v.is_array()) fail(child_path(key), "expected an array");
        return &v;
    }

    void finish() const {
        for (const auto& [key, _] : value_.items()) {
            if (!seen_.count(key)) fail(child_path(key), "unknown key");
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw_config((path.empty() ? std::string("<root>") : path) + ": " + what);
    }

private:
    const json& value_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

SourceSpec parse_source(const json& value, const std::string& path, std::uint64_t derived_seed) {
    Node n(value, path);
    SourceSpec s;
    s.source_id = n.string("source_id", "");
    if (s.source_id.empty()) Node::fail(n.child_path("source_id"), "required non-empty string");
    s.class_label = static_cast<int>(n.integer("class_label", -1, 0, 1));
    if (!n.has("class_label")) Node::fail(n.child_path("class_label"), "required (0 or 1)");
    s.n_images = static_cast<int>(n.integer("n_images", 0, 1, 1'000'000));
    if (!n.has("n_images")) Node::fail(n.child_path("n_images"), "required positive integer");
    s.signal_strength = n.number_in("signal_strength", 0.0, 0.0, 1.0);
    s.shortcut_amplitude = n.number_in("shortcut_amplitude", 0.0, 0.0, 1.0);
    const std::string kind = n.string("shortcut_kind", "none");
    const auto parsed = parse_shortcut_kind(kind);
    if (!parsed) {
        Node::fail(n.child_path("shortcut_kind"),
                   "unknown kind '" + kind + "' (expected none, corner_tag, border_frame, brightness_offset)");
    }
    s.shortcut_kind = *parsed;
    s.base_seed = n.seed("base_seed", derived_seed);
    n.finish();
    return s;
}

SplitCounts::PerClass parse_pair(Node& parent, const std::string& key, SplitCounts::PerClass fallback) {
    const json* arr = parent.array(key);
    if (!arr) return fallback;
    const std::string path = parent.child_path(key);
    if (arr->size() != 2) Node::fail(path, "expected [class0_count, class1_count]");
    SplitCounts::PerClass out{};
    for (std::size_t i = 0; i < 2; ++i) {
        const json& v = (*arr)[i];
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) Node::fail(indexed(path, i), "expected an integer >= 1");
        out[i] = static_cast<int>(v.get<std::int64_t>());
    }
    return out;
}

SplitCounts parse_counts(const json& value, const std::string& path, const SplitCounts& fallback) {
    Node n(value, path);
    SplitCounts c;
    c.train = parse_pair(n, "train", fallback.train);
    c.validation = parse_pair(n, "validation", fallback.validation);
    c.id_test = parse_pair(n, "id_test", fallback.id_test);
    c.ood_test = parse_pair(n, "ood_test", fallback.ood_test);
    n.finish();
    return c;
}

// Sources without base_seed get data_seed ^ (position in ID list, then OOD list).
void parse_composition(Node& n, Composition& comp, std::uint64_t data_seed) {
    std::uint64_t index = 0;
    if (const json* arr = n.array("id_sources")) {
        comp.id_sources.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            comp.id_sources.push_back(parse_source((*arr)[i], indexed(n.child_path("id_sources"), i), data_seed ^ index++));
        }
    } else {
        for (auto& s : comp.id_sources) s.base_seed = data_seed ^ index++;
    }
    if (const json* arr = n.array("ood_sources")) {
        comp.ood_sources.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            comp.ood_sources.push_back(parse_source((*arr)[i], indexed(n.child_path("ood_sources"), i), data_seed ^ index++));
        }
    } else {
        for (auto& s : comp.ood_sources) s.base_seed = data_seed ^ index++;
    }
    if (n.has("counts")) comp.counts = parse_counts(n.raw("counts"), n.child_path("counts"), comp.counts);
}

json source_json(const SourceSpec& s) {
    return json{{"source_id", s.source_id},
                {"class_label", s.class_label},
                {"n_images", s.n_images},
                {"signal_strength", s.signal_strength},
                {"shortcut_amplitude", s.shortcut_amplitude},
                {"shortcut_kind", std::string(to_string(s.shortcut_kind))},
                {"base_seed", s.base_seed}};
}

json counts_json(const SplitCounts& c) {
    return json{{"train", c.train}, {"validation", c.validation}, {"id_test", c.id_test}, {"ood_test", c.ood_test}};
}

json composition_json(const Composition& comp) {
    json id = json::array();
    json ood = json::array();
    for (const auto& s : comp.id_sources) id.push_back(source_json(s));
    for (const auto& s : comp.ood_sources) ood.push_back(source_json(s));
    return json{{"name", comp.name}, {"id_sources", id}, {"ood_sources", ood}, {"counts", counts_json(comp.counts)}};
}

void validate_composition(const Composition& comp, const std::string& path) {
    if (comp.id_sources.empty()) Node::fail(path + ".id_sources", "must not be empty");
    if (comp.ood_sources.empty()) Node::fail(path + ".ood_sources", "must not be empty");
    std::set<std::string> ids;
    int id_avail[2] = {0, 0};
    int ood_avail[2] = {0, 0};
    for (std::size_t i = 0; i < comp.id_sources.size(); ++i) {
        const auto& s = comp.id_sources[i];
        if (!ids.insert(s.source_id).second) Node::fail(indexed(path + ".id_sources", i) + ".source_id", "duplicate source_id");
        id_avail[s.class_label] += s.n_images;
    }
    for (std::size_t i = 0; i < comp.ood_sources.size(); ++i) {
        const auto& s = comp.ood_sources[i];
        if (!ids.insert(s.source_id).second) {
            Node::fail(indexed(path + ".ood_sources", i) + ".source_id", "source_id also used elsewhere in this composition");
        }
        ood_avail[s.class_label] += s.n_images;
    }
    const auto& c = comp.counts;
    for (int label = 0; label < 2; ++label) {
        if (id_avail[label] == 0) Node::fail(path + ".id_sources", "no source of class " + std::to_string(label));
        if (ood_avail[label] == 0) Node::fail(path + ".ood_sources", "no source of class " + std::to_string(label));
    }
    for (int label = 0; label < 2; ++label) {
        const int need = c.train[label] + c.validation[label] + c.id_test[label];
        if (need > id_avail[label]) {
            Node::fail(path + ".counts", "class " + std::to_string(label) + " needs " + std::to_string(need) +
                                             " ID images but sources provide " + std::to_string(id_avail[label]));
        }
        if (c.ood_test[label] > ood_avail[label]) {
            Node::fail(path + ".counts.ood_test", "class " + std::to_string(label) + " needs " +
                                                      std::to_string(c.ood_test[label]) + " OOD images but sources provide " +
                                                      std::to_string(ood_avail[label]));
        }
    }
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.main.name = "main";
    constexpr double kSignal = 0.01;
    constexpr double kShortcut = 0.08;
    cfg.main.id_sources = {
        {"A0", 0, 310, kSignal, 0.0, ShortcutKind::None, 0},
        {"A1", 1, 352, kSignal, kShortcut, ShortcutKind::BorderFrame, 0},
    };
    cfg.main.ood_sources = {
        {"B0", 0, 75, kSignal, 0.0, ShortcutKind::None, 0},
        {"B1", 0, 155, kSignal, 0.0, ShortcutKind::None, 0},
        {"B2", 1, 205, kSignal, 0.0, ShortcutKind::None, 0},
        {"B3", 1, 414, kSignal, 0.0, ShortcutKind::None, 0},
    };
    std::uint64_t index = 0;
    for (auto& s : cfg.main.id_sources) s.base_seed = cfg.data_seed ^ index++;
    for (auto& s : cfg.main.ood_sources) s.base_seed = cfg.data_seed ^ index++;
    return cfg;
}

void ExperimentConfig::validate() const {
    try {
        synth.validate();
    } catch (const Error& e) {
        Node::fail("data.synth", e.what());
    }
    if (target_size < 1) Node::fail("data.target_size", "must be >= 1");
    validate_composition(main, "data");
    for (std::size_t i = 0; i < ablations.size(); ++i) validate_composition(ablations[i], indexed("ablations", i));
    try {
        bank.validate();
    } catch (const Error& e) {
        Node::fail("bank", e.what());
    }
    if (target_size - bank.kernel + 1 < bank.pool) Node::fail("bank", "kernel and pool grid do not fit the target image size");
    try {
        train.validate();
    } catch (const Error& e) {
        Node::fail("train", e.what());
    }
    try {
        noise.validate();
    } catch (const Error& e) {
        Node::fail("noise", e.what());
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) Node::fail("threshold", "must be in [0, 1]");
    if (seeds.empty()) Node::fail("seeds", "must not be empty");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) Node::fail("seeds", "must be distinct");
    if (conditions.empty()) Node::fail("conditions", "must name at least one condition");
    std::set<std::string> names{main.name};
    for (std::size_t i = 0; i < ablations.size(); ++i) {
        if (ablations[i].name.empty()) Node::fail(indexed("ablations", i) + ".name", "required");
        if (!names.insert(ablations[i].name).second) Node::fail(indexed("ablations", i) + ".name", "duplicate table name");
    }
}

ExperimentConfig config_from_json(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw_config(std::string("malformed JSON: ") + e.what());
    }
    ExperimentConfig cfg = default_config();
    Node top(root, "");

    if (top.has("data")) {
        Node data(top.raw("data"), "data");
        cfg.data_seed = data.seed("base_seed", cfg.data_seed);
        cfg.target_size = static_cast<int>(data.integer("target_size", cfg.target_size, 1, 4096));
        cfg.fixed_splits = data.boolean("fixed_splits", cfg.fixed_splits);
        cfg.split_seed = data.seed("split_seed", cfg.split_seed);
        if (data.has("synth")) {
            Node s(data.raw("synth"), "data.synth");
            auto& p = cfg.synth;
            p.image_size = static_cast<int>(s.integer("image_size", p.image_size, 4, 8192));
            p.background_level = s.number_in("background_level", p.background_level, 0.0, 1.0);
            p.background_amplitude = s.number_in("background_amplitude", p.background_amplitude, 0.0, 1.0);
            p.grain_std = s.number_in("grain_std", p.grain_std, 0.0, 1.0);
            p.signal_jitter = s.number_in("signal_jitter", p.signal_jitter, 0.0, 10.0);
            p.border_fraction = s.number_in("border_fraction", p.border_fraction, 1e-9, 0.5);
            p.tag_fraction = s.number_in("tag_fraction", p.tag_fraction, 1e-9, 1.0);
            p.checker_block = static_cast<int>(s.integer("checker_block", p.checker_block, 1, 4096));
            s.finish();
        }
        parse_composition(data, cfg.main, cfg.data_seed);
        data.finish();
    } else {
        std::uint64_t index = 0;
        for (auto& s : cfg.main.id_sources) s.base_seed = cfg.data_seed ^ index++;
        for (auto& s : cfg.main.ood_sources) s.base_seed = cfg.data_seed ^ index++;
    }

    if (const json* arr = top.array("ablations")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            Node a((*arr)[i], indexed("ablations", i));
            Composition comp;
            comp.name = a.string("name", "");
            comp.counts = cfg.main.counts;
            if (!a.has("id_sources") || !a.has("ood_sources")) {
                Node::fail(indexed("ablations", i), "needs id_sources and ood_sources");
            }
            parse_composition(a, comp, cfg.data_seed);
            a.finish();
            cfg.ablations.push_back(std::move(comp));
        }
    }

    if (top.has("bank")) {
        Node b(top.raw("bank"), "bank");
        cfg.bank.filters = static_cast<int>(b.integer("filters", cfg.bank.filters, 1, 4096));
        cfg.bank.kernel = static_cast<int>(b.integer("kernel", cfg.bank.kernel, 1, 255));
        if (cfg.bank.kernel % 2 == 0) Node::fail("bank.kernel", "must be odd");
        cfg.bank.pool = static_cast<int>(b.integer("pool", cfg.bank.pool, 1, 1024));
        cfg.bank_seed = b.seed("seed", cfg.bank_seed);
        b.finish();
    }

    if (top.has("train")) {
        Node t(top.raw("train"), "train");
        auto& tc = cfg.train;
        tc.learning_rate = t.number_in("learning_rate", tc.learning_rate, 1e-12, 10.0);
        tc.lr_decay_gamma = t.number_in("lr_decay_gamma", tc.lr_decay_gamma, 1e-9, 1.0);
        tc.max_epochs = static_cast<int>(t.integer("max_epochs", tc.max_epochs, 1, 100000));
        tc.patience = static_cast<int>(t.integer("patience", tc.patience, 1, 100000));
        tc.batch_size = static_cast<int>(t.integer("batch_size", tc.batch_size, 1, 1'000'000));
        t.finish();
    }

    if (top.has("noise")) {
        Node n(top.raw("noise"), "noise");
        auto& np = cfg.noise;
        np.gaussian_mean = n.number_in("gaussian_mean", np.gaussian_mean, -1.0, 1.0);
        np.gaussian_variance = n.number_in("gaussian_variance", np.gaussian_variance, 0.0, 1.0);
        np.sp_density = n.number_in("sp_density", np.sp_density, 0.0, 1.0);
        np.sp_salt_ratio = n.number_in("sp_salt_ratio", np.sp_salt_ratio, 0.0, 1.0);
        np.speckle_variance = n.number_in("speckle_variance", np.speckle_variance, 0.0, 1.0);
        np.poisson_scale = n.number_in("poisson_scale", np.poisson_scale, 1e-9, 1e15);
        if (const json* kinds = n.array("enabled_kinds")) {
            np.enabled_kinds.clear();
            for (std::size_t i = 0; i < kinds->size(); ++i) {
                const json& k = (*kinds)[i];
                const auto parsed = k.is_string() ? parse_noise_kind(k.get<std::string>()) : std::nullopt;
                if (!parsed) {
                    Node::fail(indexed("noise.enabled_kinds", i), "expected one of gaussian, speckle, poisson, salt_pepper");
                }
                np.enabled_kinds.push_back(*parsed);
            }
            if (np.enabled_kinds.empty()) Node::fail("noise.enabled_kinds", "must not be empty");
        }
        n.finish();
    }

    cfg.threshold = top.number_in("threshold", cfg.threshold, 0.0, 1.0);

    if (const json* arr = top.array("seeds")) {
        cfg.seeds.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const json& v = (*arr)[i];
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                Node::fail(indexed("seeds", i), "expected a non-negative integer");
            }
            cfg.seeds.push_back(v.get<std::uint64_t>());
        }
    }

    if (const json* arr = top.array("conditions")) {
        cfg.conditions.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const json& v = (*arr)[i];
            const auto parsed = v.is_string() ? parse_condition(v.get<std::string>()) : std::nullopt;
            if (!parsed) Node::fail(indexed("conditions", i), "expected 'baseline' or 'noise_augmented'");
            cfg.conditions.push_back(*parsed);
        }
    }

    cfg.output_dir = top.string("output_dir", cfg.output_dir);
    top.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw_config("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const auto& p = cfg.synth;
    json data = composition_json(cfg.main);
    data.erase("name");
    data["base_seed"] = cfg.data_seed;
    data["target_size"] = cfg.target_size;
    data["fixed_splits"] = cfg.fixed_splits;
    data["split_seed"] = cfg.split_seed;
    data["synth"] = json{{"image_size", p.image_size},
                         {"background_level", p.background_level},
                         {"background_amplitude", p.background_amplitude},
                         {"grain_std", p.grain_std},
                         {"signal_jitter", p.signal_jitter},
                         {"border_fraction", p.border_fraction},
                         {"tag_fraction", p.tag_fraction},
                         {"checker_block", p.checker_block}};

    json ablations = json::array();
    for (const auto& a : cfg.ablations) ablations.push_back(composition_json(a));

    json kinds = json::array();
    for (NoiseKind k : cfg.noise.enabled_kinds) kinds.push_back(std::string(to_string(k)));
    json conditions = json::array();
    for (Condition c : cfg.conditions) conditions.push_back(std::string(to_string(c)));

    json root{
        {"data", data},
        {"ablations", ablations},
        {"bank", {{"filters", cfg.bank.filters}, {"kernel", cfg.bank.kernel}, {"pool", cfg.bank.pool}, {"seed", cfg.bank_seed}}},
        {"train",
         {{"learning_rate", cfg.train.learning_rate},
          {"lr_decay_gamma", cfg.train.lr_decay_gamma},
          {"max_epochs", cfg.train.max_epochs},
          {"patience", cfg.train.patience},
          {"batch_size", cfg.train.batch_size}}},
        {"noise",
         {{"gaussian_mean", cfg.noise.gaussian_mean},
          {"gaussian_variance", cfg.noise.gaussian_variance},
          {"sp_density", cfg.noise.sp_density},
          {"sp_salt_ratio", cfg.noise.sp_salt_ratio},
          {"speckle_variance", cfg.noise.speckle_variance},
          {"poisson_scale", cfg.noise.poisson_scale},
          {"enabled_kinds", kinds}}},
        {"threshold", cfg.threshold},
        {"seeds", cfg.seeds},
        {"conditions", conditions},
        {"output_dir", cfg.output_dir},
    };
    return root.dump(2) + "\n";
}

}  // namespace noisy_ood
