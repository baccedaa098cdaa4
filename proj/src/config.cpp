#include "qswarm/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "qswarm/format.hpp"

namespace qswarm {

namespace {

std::string_view Trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> SplitList(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    auto item = Trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

std::vector<Section> ParseSections(std::string_view text) {
  std::vector<Section> sections;
  sections.push_back({"", 0, {}});
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("malformed section header '" + std::string(line) + "'",
                          line_no);
      }
      sections.push_back(
          {std::string(Trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value', got '" + std::string(line) + "'",
                        line_no);
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("empty key", line_no);
    auto& entries = sections.back().entries;
    if (entries.count(key)) {
      throw ConfigError("duplicate key '" + key + "'", line_no);
    }
    entries[key] = {std::move(value), line_no};
  }
  return sections;
}

// Typed accessors over one section; every read key is marked so leftovers
// can be reported as unknown.
class Reader {
 public:
  explicit Reader(const Section& sec) : sec_(sec) {}

  const Entry* Find(const std::string& key) {
    auto it = sec_.entries.find(key);
    if (it == sec_.entries.end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  std::string Field(const std::string& key) const {
    return sec_.name.empty() ? key : sec_.name + "." + key;
  }

  void Real(const std::string& key, double& out) {
    if (const Entry* e = Find(key)) {
      auto v = ParseReal(e->value);
      if (!v) throw ConfigError(Field(key) + ": expected a number", e->line);
      out = *v;
    }
  }

  template <typename Int>
  void Integer(const std::string& key, Int& out) {
    if (const Entry* e = Find(key)) {
      auto v = ParseInt<Int>(e->value);
      if (!v) throw ConfigError(Field(key) + ": expected an integer", e->line);
      out = *v;
    }
  }

  void IntList(const std::string& key, std::vector<int>& out) {
    if (const Entry* e = Find(key)) {
      out.clear();
      for (auto item : SplitList(e->value)) {
        auto v = ParseInt<int>(item);
        if (!v) {
          throw ConfigError(Field(key) + ": bad integer '" + std::string(item) + "'",
                            e->line);
        }
        out.push_back(*v);
      }
    }
  }

  void RealList(const std::string& key, std::vector<double>& out) {
    if (const Entry* e = Find(key)) {
      out.clear();
      for (auto item : SplitList(e->value)) {
        auto v = ParseReal(item);
        if (!v) {
          throw ConfigError(Field(key) + ": bad number '" + std::string(item) + "'",
                            e->line);
        }
        out.push_back(*v);
      }
    }
  }

  template <typename T>
  void Choice(const std::string& key,
              std::initializer_list<std::pair<std::string_view, T>> options,
              T& out) {
    if (const Entry* e = Find(key)) {
      for (const auto& [name, value] : options) {
        if (e->value == name) {
          out = value;
          return;
        }
      }
      throw ConfigError(Field(key) + ": unknown value '" + e->value + "'", e->line);
    }
  }

  void CheckUnknown() const {
    for (const auto& [key, entry] : sec_.entries) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw ConfigError("unknown key '" + Field(key) + "'", entry.line);
      }
    }
  }

 private:
  const Section& sec_;
  std::vector<std::string> used_;
};

void ReadFire(Reader& r, FireSpec& fire, const std::filesystem::path& base_dir) {
  r.IntList("states", fire.states);
  r.Real("reward", fire.reward);
  if (const Entry* e = r.Find("field")) {
    std::filesystem::path p = e->value;
    fire.field_csv = p.is_absolute() ? p : base_dir / p;
  }
}

std::string JoinInts(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(xs[i]);
  }
  return s;
}

RewardField FieldFor(const FireSpec& spec, const GridSpec& grid) {
  if (spec.field_csv) return ReadRewardFieldCsv(*spec.field_csv, grid);
  return RewardField::FromStates(grid, spec.states, spec.reward);
}

}  // namespace

bool IsSweepParam(std::string_view name) {
  static constexpr std::string_view kParams[] = {
      "agents",    "steps",     "gamma",     "alpha_max",    "alpha_min",
      "alpha_half", "temp_max", "temp_min",  "temp_half",    "epsilon_half",
      "period_length"};
  return std::find(std::begin(kParams), std::end(kParams), name) !=
         std::end(kParams);
}

ExperimentConfig ExperimentConfig::WithParam(std::string_view name,
                                             double value) const {
  ExperimentConfig c = *this;
  if (name == "agents") {
    c.num_agents = static_cast<int>(value);
    c.starts.clear();
  } else if (name == "steps") {
    c.total_steps = static_cast<std::int64_t>(value);
  } else if (name == "gamma") {
    c.params.gamma = value;
  } else if (name == "alpha_max") {
    c.params.alpha.v_max = value;
  } else if (name == "alpha_min") {
    c.params.alpha.v_min = value;
  } else if (name == "alpha_half") {
    c.params.alpha.half_life = value;
  } else if (name == "temp_max") {
    c.params.temperature.v_max = value;
  } else if (name == "temp_min") {
    c.params.temperature.v_min = value;
  } else if (name == "temp_half") {
    c.params.temperature.half_life = value;
  } else if (name == "epsilon_half") {
    c.epsilon.half_life = value;
  } else if (name == "period_length") {
    c.period.period_length = static_cast<std::int64_t>(value);
  } else {
    throw ConfigError("sweep.param: unknown parameter '" + std::string(name) + "'");
  }
  return c;
}

void ExperimentConfig::Validate() const {
  const int n = grid.num_states();
  auto check_state = [n](int s, const std::string& field) {
    if (s < 0 || s >= n) {
      throw ConfigError(field + ": state out of range (" + std::to_string(s) +
                        " not in [0," + std::to_string(n) + "))");
    }
  };
  if (num_agents < 1) throw ConfigError("experiment.agents: must be >= 1");
  if (total_steps < 1) throw ConfigError("experiment.steps: must be >= 1");
  if (replications < 1) {
    throw ConfigError("experiment.replications: must be >= 1");
  }
  if (coverage_cap < 1) throw ConfigError("experiment.coverage_cap: must be >= 1");
  check_state(start_state, "grid.start");
  if (!starts.empty() && static_cast<int>(starts.size()) != num_agents) {
    throw ConfigError("grid.starts: need one start per agent (" +
                      std::to_string(num_agents) + ")");
  }
  for (int s : starts) check_state(s, "grid.starts");
  if (fire.empty()) throw ConfigError("fire: no fire segment");
  for (std::size_t i = 0; i < fire.size(); ++i) {
    const std::string field = i == 0 ? "fire" : "segment";
    if (!fire[i].field_csv) {
      for (int s : fire[i].states) check_state(s, field + ".states");
      if (!(fire[i].reward >= 0.0)) {
        throw ConfigError(field + ".reward: must be >= 0");
      }
    }
    if (i > 0 && fire[i].start_step <= fire[i - 1].start_step) {
      throw ConfigError("segment.start: must increase across segments");
    }
  }
  if (relocate && fire.size() > 1) {
    throw ConfigError("fire.relocate: cannot combine with explicit segments");
  }
  if (relocate && period.period_length < 1) {
    throw ConfigError("fire.relocate: needs period.length >= 1");
  }
  try {
    params.Validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("learning: ") + e.what());
  }
  if (strategy == Strategy::kEpsilonGreedy &&
      (epsilon.v_max > 1.0 || epsilon.v_min < 0.0 || epsilon.v_max < epsilon.v_min ||
       !(epsilon.half_life > 0.0))) {
    throw ConfigError("learning.epsilon_*: need 1 >= max >= min >= 0, half > 0");
  }
  if (period.period_length < 0) throw ConfigError("period.length: must be >= 0");
  if (sweep) {
    if (!IsSweepParam(sweep->param)) {
      throw ConfigError("sweep.param: unknown parameter '" + sweep->param + "'");
    }
    if (sweep->values.empty()) throw ConfigError("sweep.values: empty");
    for (double v : sweep->values) {
      ExperimentConfig point = WithParam(sweep->param, v);
      point.sweep.reset();
      point.Validate();
    }
  }
}

FireSchedule ExperimentConfig::BaseSchedule() const {
  std::vector<FireSchedule::Segment> segments;
  for (const FireSpec& f : fire) {
    segments.push_back({f.start_step, FieldFor(f, grid)});
  }
  return FireSchedule(std::move(segments));
}

EngineConfig ExperimentConfig::MakeEngineConfig(std::uint64_t run_seed) const {
  EngineConfig ec;
  if (relocate) {
    Rng fire_rng(SplitMix64(run_seed ^ 0x5EEDF14EULL));
    ec.schedule = MakeRelocatingSchedule(FieldFor(fire.front(), grid),
                                         period.period_length, total_steps,
                                         fire_rng);
  } else {
    ec.schedule = BaseSchedule();
  }
  ec.params = params;
  ec.period = period;
  ec.strategy = strategy;
  ec.epsilon = epsilon;
  ec.start_states =
      starts.empty() ? std::vector<int>(static_cast<std::size_t>(num_agents), start_state)
                     : starts;
  ec.seed = run_seed;
  ec.coverage = coverage;
  return ec;
}

std::string ExperimentConfig::Echo() const {
  std::ostringstream o;
  o << "[experiment]\n"
    << "agents = " << num_agents << "\n"
    << "steps = " << total_steps << "\n"
    << "replications = " << replications << "\n"
    << "seed = " << seed << "\n"
    << "strategy = "
    << (strategy == Strategy::kBoltzmann ? "boltzmann" : "epsilon-greedy") << "\n"
    << "measure = "
    << (measure == SweepMeasure::kFireFraction ? "fire" : "coverage") << "\n"
    << "coverage = "
    << (coverage == CoverageMode::kStates ? "states" : "pairs") << "\n"
    << "coverage_cap = " << coverage_cap << "\n\n";
  o << "[grid]\n"
    << "width = " << grid.width << "\n"
    << "height = " << grid.height << "\n"
    << "start = " << start_state << "\n";
  if (!starts.empty()) o << "starts = " << JoinInts(starts) << "\n";
  o << "\n[learning]\n"
    << "gamma = " << FormatReal(params.gamma) << "\n"
    << "alpha_max = " << FormatReal(params.alpha.v_max) << "\n"
    << "alpha_min = " << FormatReal(params.alpha.v_min) << "\n"
    << "alpha_half = " << FormatReal(params.alpha.half_life) << "\n"
    << "temp_max = " << FormatReal(params.temperature.v_max) << "\n"
    << "temp_min = " << FormatReal(params.temperature.v_min) << "\n"
    << "temp_half = " << FormatReal(params.temperature.half_life) << "\n"
    << "epsilon_max = " << FormatReal(epsilon.v_max) << "\n"
    << "epsilon_min = " << FormatReal(epsilon.v_min) << "\n"
    << "epsilon_half = " << FormatReal(epsilon.half_life) << "\n\n";
  o << "[period]\n"
    << "length = " << period.period_length << "\n"
    << "mode = " << (period.mode == PeriodMode::kReset ? "reset" : "carry") << "\n"
    << "warm_restart = " << FormatReal(period.warm_restart) << "\n";
  for (std::size_t i = 0; i < fire.size(); ++i) {
    const FireSpec& f = fire[i];
    o << "\n" << (i == 0 ? "[fire]\n" : "[segment]\n");
    if (i > 0) o << "start = " << f.start_step << "\n";
    if (f.field_csv) {
      o << "field = " << f.field_csv->string() << "\n";
    } else {
      o << "states = " << JoinInts(f.states) << "\n"
        << "reward = " << FormatReal(f.reward) << "\n";
    }
    if (i == 0) o << "relocate = " << (relocate ? "random" : "none") << "\n";
  }
  if (sweep) {
    o << "\n[sweep]\nparam = " << sweep->param << "\nvalues = ";
    for (std::size_t i = 0; i < sweep->values.size(); ++i) {
      o << (i ? "," : "") << FormatReal(sweep->values[i]);
    }
    o << "\n";
  }
  return o.str();
}

ExperimentConfig LoadConfigString(std::string_view text,
                                  const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  bool fire_seen = false;
  bool agents_set = false;
  for (const Section& sec : ParseSections(text)) {
    Reader r(sec);
    if (sec.name.empty()) {
      // Keys before any header are not allowed.
      r.CheckUnknown();
    } else if (sec.name == "experiment") {
      if (r.Find("agents")) agents_set = true;
      r.Integer("agents", c.num_agents);
      r.Integer("steps", c.total_steps);
      r.Integer("replications", c.replications);
      r.Integer("seed", c.seed);
      r.Integer("coverage_cap", c.coverage_cap);
      r.Choice<Strategy>("strategy",
                         {{"boltzmann", Strategy::kBoltzmann},
                          {"epsilon-greedy", Strategy::kEpsilonGreedy}},
                         c.strategy);
      r.Choice<SweepMeasure>("measure",
                             {{"fire", SweepMeasure::kFireFraction},
                              {"coverage", SweepMeasure::kCoverage}},
                             c.measure);
      r.Choice<CoverageMode>("coverage",
                             {{"states", CoverageMode::kStates},
                              {"pairs", CoverageMode::kStateActionPairs}},
                             c.coverage);
    } else if (sec.name == "grid") {
      int w = c.grid.width, h = c.grid.height;
      r.Integer("width", w);
      r.Integer("height", h);
      if (w < 1 || h < 1) {
        throw ConfigError("grid: width and height must be >= 1", sec.line);
      }
      c.grid = GridSpec(w, h);
      r.Integer("start", c.start_state);
      r.IntList("starts", c.starts);
    } else if (sec.name == "learning") {
      r.Real("gamma", c.params.gamma);
      r.Real("alpha_max", c.params.alpha.v_max);
      r.Real("alpha_min", c.params.alpha.v_min);
      r.Real("alpha_half", c.params.alpha.half_life);
      r.Real("temp_max", c.params.temperature.v_max);
      r.Real("temp_min", c.params.temperature.v_min);
      r.Real("temp_half", c.params.temperature.half_life);
      r.Real("epsilon_max", c.epsilon.v_max);
      r.Real("epsilon_min", c.epsilon.v_min);
      r.Real("epsilon_half", c.epsilon.half_life);
    } else if (sec.name == "period") {
      r.Integer("length", c.period.period_length);
      r.Choice<PeriodMode>("mode",
                           {{"reset", PeriodMode::kReset},
                            {"carry", PeriodMode::kCarryForward}},
                           c.period.mode);
      r.Real("warm_restart", c.period.warm_restart);
    } else if (sec.name == "fire") {
      if (fire_seen) throw ConfigError("duplicate [fire] section", sec.line);
      fire_seen = true;
      ReadFire(r, c.fire.front(), base_dir);
      r.Choice<bool>("relocate", {{"none", false}, {"random", true}}, c.relocate);
    } else if (sec.name == "segment") {
      FireSpec seg;
      seg.states.clear();
      const Entry* start = r.Find("start");
      if (!start) throw ConfigError("segment.start: missing", sec.line);
      auto v = ParseInt<std::int64_t>(start->value);
      if (!v || *v < 1) {
        throw ConfigError("segment.start: expected an integer >= 1", start->line);
      }
      seg.start_step = *v;
      ReadFire(r, seg, base_dir);
      c.fire.push_back(std::move(seg));
    } else if (sec.name == "sweep") {
      SweepAxis axis;
      if (const Entry* e = r.Find("param")) axis.param = e->value;
      r.RealList("values", axis.values);
      if (axis.param.empty()) throw ConfigError("sweep.param: missing", sec.line);
      c.sweep = std::move(axis);
    } else {
      throw ConfigError("unknown section [" + sec.name + "]", sec.line);
    }
    r.CheckUnknown();
  }
  if (!agents_set && !c.starts.empty()) {
    c.num_agents = static_cast<int>(c.starts.size());
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadConfigString(ss.str(), path.parent_path());
}

RewardField ReadRewardFieldCsv(const std::filesystem::path& path,
                               const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reward field " + path.string());
  std::vector<double> values(static_cast<std::size_t>(grid.num_states()), -1.0);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = Trim(line);
    if (t.empty()) continue;
    if (line_no == 1) {
      if (t != "state_index,reward") {
        throw ConfigError(path.string() + ": expected header state_index,reward",
                          line_no);
      }
      continue;
    }
    const auto comma = t.find(',');
    auto idx = ParseInt<int>(Trim(t.substr(0, comma)));
    auto val = comma == std::string_view::npos
                   ? std::nullopt
                   : ParseReal(Trim(t.substr(comma + 1)));
    if (!idx || !val) throw ConfigError(path.string() + ": malformed row", line_no);
    if (*idx < 0 || *idx >= grid.num_states()) {
      throw ConfigError(path.string() + ": state out of range", line_no);
    }
    if (*val < 0.0) throw ConfigError(path.string() + ": negative reward", line_no);
    values[static_cast<std::size_t>(*idx)] = *val;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      throw ConfigError(path.string() + ": no reward for state " + std::to_string(i));
    }
  }
  return RewardField(grid, std::move(values));
}

void WriteRewardFieldCsv(std::ostream& out, const RewardField& field) {
  out << "state_index,reward\n";
  for (int s = 0; s < field.grid().num_states(); ++s) {
    out << s << ',' << FormatReal(field.at(s)) << '\n';
  }
}

FireSchedule MakeRelocatingSchedule(const RewardField& base, std::int64_t period,
                                    std::int64_t total_steps, Rng& rng) {
  if (period < 1) throw ValidationError("relocation needs a period >= 1");
  const GridSpec& grid = base.grid();
  const auto fire = base.fire_states();
  if (fire.empty()) return FireSchedule(base);
  int x0 = grid.width, y0 = grid.height, x1 = -1, y1 = -1;
  for (int s : fire) {
    const CellState c = CellFromIndex(grid, s);
    x0 = std::min(x0, c.x);
    y0 = std::min(y0, c.y);
    x1 = std::max(x1, c.x);
    y1 = std::max(y1, c.y);
  }
  const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
  const int nx = grid.width - bw + 1, ny = grid.height - bh + 1;
  const int options = nx * ny;

  std::vector<FireSchedule::Segment> segments{{0, base}};
  int current = y0 * nx + x0;
  for (std::int64_t start = period; start < total_steps; start += period) {
    int pick = current;
    if (options > 1) {
      // Uniform over the offsets other than the current one.
      pick = static_cast<int>(rng.Below(static_cast<std::uint64_t>(options - 1)));
      if (pick >= current) ++pick;
    }
    const int ox = pick % nx, oy = pick / nx;
    std::vector<double> values(static_cast<std::size_t>(grid.num_states()), 0.0);
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        values[static_cast<std::size_t>(StateIndex(grid, {ox + x, oy + y}))] =
            base.at(CellState{x0 + x, y0 + y});
      }
    }
    segments.push_back({start, RewardField(grid, std::move(values))});
    current = pick;
  }
  return FireSchedule(std::move(segments));
}

}  // namespace qswarm
