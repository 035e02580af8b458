#include "vdt/run_config.hpp"

#include <fstream>
#include <sstream>

namespace vdt {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out;
    if (!(is >> out) || !(is >> std::ws).eof())
        throw ConfigError("config: bad value '" + value + "' for key '" + key + "'");
    return out;
}

}  // namespace

void RunConfig::validate() const {
    parse_model_size(size);  // throws on unknown size
    if (patch != 1 && patch != 2 && patch != 4)
        throw ConfigError("config: patch must be 1, 2 or 4, got " + std::to_string(patch));
    if (levels < 1) throw ConfigError("config: codec levels must be >= 1");
    if (T < 1) throw ConfigError("config: schedule T must be >= 1");
    if (s <= 0) throw ConfigError("config: schedule s must be > 0");
    if (steps < 1 || adapter_steps < 1) throw ConfigError("config: steps must be >= 1");
    if (batch < 1) throw ConfigError("config: batch must be >= 1");
    if (lr <= 0) throw ConfigError("config: lr must be > 0");
    if (val_interval < 1) throw ConfigError("config: val_interval must be >= 1");
    if (huber_delta <= 0) throw ConfigError("config: huber_delta must be > 0");
    if (n < 1) throw ConfigError("config: dataset n must be >= 1");
    if (geometry < 16) throw ConfigError("config: geometry must be >= 16");
    if (n_labels < 1 || n_labels > 2) throw ConfigError("config: n_labels must be 1 or 2");
    if (adapter_mode != "learned" && adapter_mode != "fixed")
        throw ConfigError("config: adapter mode must be 'learned' or 'fixed'");
    if (pi < 0) throw ConfigError("config: pi must be >= 0");
    if (sample_n < 1) throw ConfigError("config: sample_n must be >= 1");
    if (sample_mode != "deterministic" && sample_mode != "ancestral")
        throw ConfigError("config: sample mode must be 'deterministic' or 'ancestral'");
    if (geometry % (int64_t{1} << levels) != 0)
        throw ConfigError("config: geometry " + std::to_string(geometry) +
                          " not divisible by 2^levels = " + std::to_string(int64_t{1} << levels));
    dit_config();          // validates divisibility of latent extents by patch, d % 6, ...
    injection_layers();    // validates the injection spec
}

LatentSpec RunConfig::latent_spec() const {
    LatentSpec spec;
    spec.levels = levels;
    spec.input_channels = 1;
    return spec;
}

std::array<int64_t, 3> RunConfig::volume_geometry() const { return {geometry, geometry, geometry}; }

std::array<int64_t, 3> RunConfig::latent_extents() const {
    int64_t e = geometry / (int64_t{1} << levels);
    return {e, e, e};
}

DiTConfig RunConfig::dit_config() const {
    return make_config(parse_model_size(size), patch, latent_spec().latent_channels(),
                       latent_extents());
}

std::vector<int> RunConfig::injection_layers() const {
    DiTConfig dc = dit_config();
    std::vector<int> out;
    if (injection == "all") {
        for (int i = 1; i <= dc.depth; ++i) out.push_back(i);
        return out;
    }
    std::istringstream is(injection);
    std::string item;
    while (std::getline(is, item, ',')) {
        int l = parse_num<int>("adapter.injection", trim(item));
        if (l < 1 || l > dc.depth)
            throw ConfigError("config: injection layer " + std::to_string(l) + " outside 1.." +
                              std::to_string(dc.depth));
        out.push_back(l);
    }
    if (out.empty()) throw ConfigError("config: empty injection layer list");
    return out;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    cfg.echo = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        std::string key = section + "." + trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));

        if (key == "model.size") cfg.size = value;
        else if (key == "model.patch") cfg.patch = parse_num<int>(key, value);
        else if (key == "codec.levels") cfg.levels = parse_num<int>(key, value);
        else if (key == "schedule.T") cfg.T = parse_num<int>(key, value);
        else if (key == "schedule.s") cfg.s = parse_num<double>(key, value);
        else if (key == "train.steps") cfg.steps = parse_num<int>(key, value);
        else if (key == "train.batch") cfg.batch = parse_num<int>(key, value);
        else if (key == "train.lr") cfg.lr = parse_num<double>(key, value);
        else if (key == "train.seed") cfg.seed = parse_num<uint64_t>(key, value);
        else if (key == "train.val_interval") cfg.val_interval = parse_num<int>(key, value);
        else if (key == "train.huber_delta") cfg.huber_delta = parse_num<double>(key, value);
        else if (key == "data.n") cfg.n = parse_num<int>(key, value);
        else if (key == "data.geometry") cfg.geometry = parse_num<int64_t>(key, value);
        else if (key == "data.n_labels") cfg.n_labels = parse_num<int>(key, value);
        else if (key == "adapter.mode") cfg.adapter_mode = value;
        else if (key == "adapter.pi") cfg.pi = parse_num<double>(key, value);
        else if (key == "adapter.injection") cfg.injection = value;
        else if (key == "adapter.steps") cfg.adapter_steps = parse_num<int>(key, value);
        else if (key == "sample.n") cfg.sample_n = parse_num<int>(key, value);
        else if (key == "sample.mode") cfg.sample_mode = value;
        else if (key == "out.dir") cfg.out_dir = value;
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return parse_run_config(os.str());
}

std::string render_run_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[model]\nsize = " << cfg.size << "\npatch = " << cfg.patch << "\n";
    os << "[codec]\nlevels = " << cfg.levels << "\n";
    os << "[schedule]\nT = " << cfg.T << "\ns = " << cfg.s << "\n";
    os << "[train]\nsteps = " << cfg.steps << "\nbatch = " << cfg.batch << "\nlr = " << cfg.lr
       << "\nseed = " << cfg.seed << "\nval_interval = " << cfg.val_interval
       << "\nhuber_delta = " << cfg.huber_delta << "\n";
    os << "[data]\nn = " << cfg.n << "\ngeometry = " << cfg.geometry
       << "\nn_labels = " << cfg.n_labels << "\n";
    os << "[adapter]\nmode = " << cfg.adapter_mode << "\npi = " << cfg.pi
       << "\ninjection = " << cfg.injection << "\nsteps = " << cfg.adapter_steps << "\n";
    os << "[sample]\nn = " << cfg.sample_n << "\nmode = " << cfg.sample_mode << "\n";
    os << "[out]\ndir = " << cfg.out_dir << "\n";
    return os.str();
}

}  // namespace vdt
