#include "argbot/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot {

namespace po = boost::program_options;

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(Errc::InvalidConfig, why); };
  if (conditions.empty()) bad("condition set is empty");
  if (min_group_size < 1 || min_group_size > target_group_size) bad("need 1 <= min_group_size <= target_group_size");
  if (!(waiting_cap > 0.0)) bad("waiting_cap must be positive");
  if (!(discussion_duration > 0.0)) bad("discussion_duration must be positive");
  for (std::size_t i = 0; i < injection_times.size(); ++i) {
    if (injection_times[i] < 0.0 || injection_times[i] >= discussion_duration) {
      bad("injection times must lie inside the discussion");
    }
    if (i > 0 && injection_times[i] <= injection_times[i - 1]) bad("injection times must be strictly increasing");
  }
  if (!(survey_timeout > 0.0) || !(reconnect_grace >= 0.0)) bad("timeouts must be positive");
  if (assignment != "simple" && assignment != "blocked") bad("assignment must be simple or blocked");
}

void SimParams::validate() const {
  auto prob = [](double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidConfig, std::string(key) + " must be in [0,1]");
  };
  prob(p_new, "sim.p_new");
  prob(p_adopt, "sim.p_adopt");
  prob(p_attention_fail, "sim.p_attention_fail");
  prob(p_technical_failure, "sim.p_technical_failure");
  prob(p_sex_other, "sim.p_sex_other");
  if (groups_per_condition < 1) throw Error(Errc::InvalidConfig, "sim.groups_per_condition must be >= 1");
  if (!(comment_rate >= 0.0) || !(verbosity >= 0.0)) throw Error(Errc::InvalidConfig, "rates must be >= 0");
  if (!(arrival_mean > 0.0)) throw Error(Errc::InvalidConfig, "sim.arrival_mean must be positive");
  if (pool_size < 0) throw Error(Errc::InvalidConfig, "sim.pool_size must be >= 0");
}

nlohmann::json FileConfig::to_json() const {
  const auto& e = experiment;
  std::vector<std::string> conds;
  for (auto c : e.conditions) conds.emplace_back(to_string(c));
  return {
      {"profile", e.profile},
      {"conditions", conds},
      {"target_group_size", e.target_group_size},
      {"min_group_size", e.min_group_size},
      {"waiting_cap", e.waiting_cap},
      {"discussion_duration", e.discussion_duration},
      {"injection_times", e.injection_times},
      {"seed", e.seed},
      {"survey_timeout", e.survey_timeout},
      {"reconnect_grace", e.reconnect_grace},
      {"attention_pre_answer", e.attention_pre_answer},
      {"attention_post_answer", e.attention_post_answer},
      {"assignment", e.assignment},
      {"sim",
       {{"groups_per_condition", sim.groups_per_condition},
        {"comment_rate", sim.comment_rate},
        {"p_new", sim.p_new},
        {"p_adopt", sim.p_adopt},
        {"verbosity", sim.verbosity},
        {"pool_size", sim.pool_size},
        {"arrival_mean", sim.arrival_mean},
        {"p_attention_fail", sim.p_attention_fail},
        {"p_technical_failure", sim.p_technical_failure},
        {"p_sex_other", sim.p_sex_other}}},
  };
}

std::string FileConfig::hash() const { return text::hex64(text::fnv1a(to_json().dump())); }

FileConfig config_from_json(const nlohmann::json& j) {
  FileConfig cfg;
  auto& e = cfg.experiment;
  auto& s = cfg.sim;
  try {
    e.profile = j.at("profile").get<std::string>();
    e.conditions.clear();
    for (const auto& c : j.at("conditions")) e.conditions.push_back(parse_condition(c.get<std::string>()));
    e.target_group_size = j.at("target_group_size").get<int>();
    e.min_group_size = j.at("min_group_size").get<int>();
    e.waiting_cap = j.at("waiting_cap").get<double>();
    e.discussion_duration = j.at("discussion_duration").get<double>();
    e.injection_times = j.at("injection_times").get<std::vector<double>>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.survey_timeout = j.at("survey_timeout").get<double>();
    e.reconnect_grace = j.at("reconnect_grace").get<double>();
    e.attention_pre_answer = j.at("attention_pre_answer").get<int>();
    e.attention_post_answer = j.at("attention_post_answer").get<int>();
    e.assignment = j.at("assignment").get<std::string>();
    const auto& sj = j.at("sim");
    s.groups_per_condition = sj.at("groups_per_condition").get<int>();
    s.comment_rate = sj.at("comment_rate").get<double>();
    s.p_new = sj.at("p_new").get<double>();
    s.p_adopt = sj.at("p_adopt").get<double>();
    s.verbosity = sj.at("verbosity").get<double>();
    s.pool_size = sj.at("pool_size").get<int>();
    s.arrival_mean = sj.at("arrival_mean").get<double>();
    s.p_attention_fail = sj.at("p_attention_fail").get<double>();
    s.p_technical_failure = sj.at("p_technical_failure").get<double>();
    s.p_sex_other = sj.at("p_sex_other").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::InvalidConfig, std::string("config json: ") + ex.what());
  }
  e.validate();
  s.validate();
  return cfg;
}

FileConfig parse_config(std::string_view content) {
  FileConfig cfg;
  auto& e = cfg.experiment;
  auto& s = cfg.sim;
  std::string injection_times;
  std::string profile;

  po::options_description desc;
  desc.add_options()                                                         //
      ("profile", po::value(&profile))                                      //
      ("target_group_size", po::value(&e.target_group_size))                //
      ("min_group_size", po::value(&e.min_group_size))                      //
      ("waiting_cap", po::value(&e.waiting_cap))                            //
      ("discussion_duration", po::value(&e.discussion_duration))            //
      ("injection_times", po::value(&injection_times))                      //
      ("seed", po::value(&e.seed))                                          //
      ("survey_timeout", po::value(&e.survey_timeout))                      //
      ("reconnect_grace", po::value(&e.reconnect_grace))                    //
      ("attention_pre_answer", po::value(&e.attention_pre_answer))          //
      ("attention_post_answer", po::value(&e.attention_post_answer))        //
      ("assignment", po::value(&e.assignment))                              //
      ("sim.groups_per_condition", po::value(&s.groups_per_condition))      //
      ("sim.comment_rate", po::value(&s.comment_rate))                      //
      ("sim.p_new", po::value(&s.p_new))                                    //
      ("sim.p_adopt", po::value(&s.p_adopt))                                //
      ("sim.verbosity", po::value(&s.verbosity))                            //
      ("sim.pool_size", po::value(&s.pool_size))                            //
      ("sim.arrival_mean", po::value(&s.arrival_mean))                      //
      ("sim.p_attention_fail", po::value(&s.p_attention_fail))              //
      ("sim.p_technical_failure", po::value(&s.p_technical_failure))        //
      ("sim.p_sex_other", po::value(&s.p_sex_other));

  std::istringstream in{std::string(content)};
  po::variables_map vm;
  try {
    po::store(po::parse_config_file(in, desc, false), vm);
    po::notify(vm);
  } catch (const po::error& ex) {
    throw Error(Errc::InvalidConfig, std::string("config: ") + ex.what());
  }

  if (!profile.empty()) {
    e.profile = profile;
    try {
      e.conditions = condition_profile(profile);
    } catch (const Error& ex) {
      throw Error(Errc::InvalidConfig, ex.what());
    }
  }
  if (vm.count("injection_times")) {
    e.injection_times.clear();
    for (const auto& part : text::split(injection_times, ',')) {
      const std::string t = text::trim(part);
      if (t.empty()) continue;
      try {
        std::size_t used = 0;
        e.injection_times.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidConfig, "bad injection time: " + t);
      }
    }
  }
  e.validate();
  s.validate();
  return cfg;
}

FileConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace argbot
