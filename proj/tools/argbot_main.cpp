// argbot: operator entry point (serve, simulate, annotate, export, analyze,
// validate-sample).

#include <atomic>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "argbot/analytics.hpp"
#include "argbot/annotation.hpp"
#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/error.hpp"
#include "argbot/export.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/pipeline.hpp"
#include "argbot/rng.hpp"
#include "argbot/server.hpp"
#include "argbot/simulation.hpp"
#include "argbot/store.hpp"

namespace fs = std::filesystem;
using namespace argbot;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitAnnotationErrors = 3;

struct Common {
  std::string catalog;
  std::string aliases;
  std::string backend = "mock";
  bool force = false;
};

llm::AliasTable load_aliases(const std::string& path) {
  return path.empty() ? llm::AliasTable{} : llm::AliasTable::load(path);
}

std::shared_ptr<llm::Gateway> make_gateway(const Common& c) {
  if (c.backend == "mock") return std::make_shared<llm::Gateway>(std::make_shared<llm::MockBackend>(load_aliases(c.aliases)));
  if (c.backend == "live") {
    return std::make_shared<llm::Gateway>(std::make_shared<llm::HttpBackend>(llm::HttpBackendConfig::from_env()));
  }
  throw Error(Errc::InvalidArgument, "unknown backend: " + c.backend);
}

// Derived artifacts live under <store>/derived/<config hash>/.
fs::path derived_dir(const store::SessionStore& s) {
  return s.root() / "derived" / s.manifest().value("config_hash", std::string("unversioned"));
}

int cmd_serve(const Common& c, const std::string& config_path, const std::string& store_dir, server::ServerOptions opts,
              bool fsync) {
  const auto cfg = load_config(config_path);
  const auto catalog = load_catalog(c.catalog);
  auto st = store::SessionStore::create(store_dir, pipeline::make_manifest(cfg, catalog, "live"), {fsync});
  server::Server srv(cfg, catalog, make_gateway(c), st.get(), opts);
  std::cout << "listening on " << opts.address << ":" << srv.port() << std::endl;
  srv.run();
  return 0;
}

int cmd_simulate(const Common& c, const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  auto cfg = load_config(config_path);
  if (seed) cfg.experiment.seed = *seed;
  const auto catalog = load_catalog(c.catalog);
  const auto aliases = load_aliases(c.aliases);

  const fs::path target(out);
  const fs::path staging = target.parent_path() / (target.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  sim::SimResult result;
  {
    auto st = store::SessionStore::create(staging, pipeline::make_manifest(cfg, catalog, "simulation"));
    result = sim::run_simulation(cfg, catalog, aliases, st.get());
    st->flush();
  }
  store::write_output(staging / "ground_truth.jsonl", pipeline::ground_truth_jsonl(result.ground_truth), false);
  try {
    store::publish_directory(staging, target, c.force);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(staging);
  std::size_t bot = 0, human = 0;
  for (const auto& [id, room] : result.rooms) {
    for (const auto& cm : room.comments) (cm.bot_generated ? bot : human)++;
  }
  std::cout << fmt::format("rooms {}  participants {}  human comments {}  bot comments {}  virtual time {:.0f}s\n",
                           result.rooms.size(), result.participants.list().size(), human, bot, result.end_time);
  std::cout << "config hash " << cfg.hash() << "\n";
  return 0;
}

int cmd_annotate(const Common& c, const std::string& store_dir, double max_error_rate) {
  auto st = store::SessionStore::open(store_dir);
  const auto catalog = load_catalog(c.catalog);
  pipeline::check_catalog(st->manifest(), catalog);
  const auto study = pipeline::load_study(*st);
  auto gateway = make_gateway(c);
  const auto annotations = pipeline::annotate_rooms(study.rooms, catalog, *gateway);
  const auto dir = derived_dir(*st);
  store::write_output(dir / "annotations.jsonl", pipeline::annotations_jsonl(annotations), c.force);

  const double rate = pipeline::error_rate(annotations);
  std::cout << fmt::format("annotated {} comments, error rate {:.4f}\n", annotations.size(), rate);
  const auto truth_path = st->root() / "ground_truth.jsonl";
  if (fs::exists(truth_path)) {
    const auto truth = pipeline::planted_sets(pipeline::parse_ground_truth_jsonl(store::read_file(truth_path)));
    const auto labeled = annotation::to_labeled(annotations);
    std::cout << fmt::format("agreement with planted arguments {:.6f}\n", annotation::agreement_rate(labeled, truth));
    std::cout << fmt::format("jaccard agreement with planted arguments {:.6f}\n",
                             annotation::jaccard_agreement(labeled, truth));
  }
  std::cout << "wrote " << (dir / "annotations.jsonl").string() << "\n";
  if (rate > max_error_rate) {
    spdlog::error("annotation error rate {:.4f} exceeds threshold {:.4f}", rate, max_error_rate);
    return kExitAnnotationErrors;
  }
  return 0;
}

std::vector<annotation::CommentAnnotation> load_annotations(const store::SessionStore& st) {
  const auto path = derived_dir(st) / "annotations.jsonl";
  if (!fs::exists(path)) throw Error(Errc::Io, "no annotations at " + path.string() + "; run annotate first");
  return pipeline::parse_annotations_jsonl(store::read_file(path));
}

int cmd_export(const Common& c, const std::string& store_dir) {
  auto st = store::SessionStore::open(store_dir);
  const auto cfg = pipeline::manifest_config(st->manifest());
  const auto study = pipeline::load_study(*st);
  const auto table =
      exporting::build_participant_table(study.rooms, study.participants, load_annotations(*st), cfg.experiment);
  const auto dir = derived_dir(*st);
  store::write_output(dir / "participants.csv", exporting::to_csv(table.rows), c.force);
  store::write_output(dir / "exclusions.tsv", exporting::exclusions_tsv(table.exclusions), c.force);
  std::cout << fmt::format("{} retained, {} excluded\nwrote {}\n", table.rows.size(), table.exclusions.excluded.size(),
                           (dir / "participants.csv").string());
  return 0;
}

int cmd_analyze(const Common& c, const std::string& store_dir, const std::string& spec_name,
                const std::vector<std::string>& outcome_names, bool raw) {
  auto st = store::SessionStore::open(store_dir);
  const auto dir = derived_dir(*st);
  const auto csv_path = dir / "participants.csv";
  if (!fs::exists(csv_path)) throw Error(Errc::Io, "no participant table at " + csv_path.string() + "; run export first");
  const auto rows = exporting::parse_csv(store::read_file(csv_path));

  std::vector<analytics::Outcome> outcomes;
  for (const auto& n : outcome_names) {
    if (n == "all") {
      outcomes = analytics::all_outcomes();
      break;
    }
    outcomes.push_back(analytics::parse_outcome(n));
  }
  if (outcomes.empty()) outcomes.push_back(analytics::Outcome::UniqueArguments);
  const auto kind = analytics::parse_model_kind(spec_name);

  std::vector<analytics::RegressionFit> fits;
  std::vector<std::string> titles;
  std::string contrasts;
  for (auto o : outcomes) {
    analytics::ModelSpec spec;
    spec.kind = kind;
    spec.outcome = o;
    spec.standardize = !raw;
    const auto a = pipeline::analyze(rows, spec);
    fits.push_back(a.fit);
    titles.emplace_back(analytics::to_string(o));
    if (a.dropped > 0) std::cerr << fmt::format("{}: {} incomplete rows dropped\n", analytics::to_string(o), a.dropped);
    if (!a.contrasts.empty()) {
      contrasts += fmt::format("\nContrasts: {}\n{}", analytics::to_string(o), analytics::contrast_table(a.contrasts));
    }
  }
  const std::string table = analytics::regression_table(fits, titles) + contrasts;
  std::cout << table;

  std::string stem = std::string(analytics::to_string(kind));
  stem += outcome_names.size() == 1 ? "_" + outcome_names.front() : "_multi";
  if (raw) stem += "_raw";
  store::write_output(dir / "analysis" / (stem + ".txt"), table, c.force);
  store::write_output(dir / "analysis" / (stem + ".csv"), analytics::fits_csv(fits, titles), c.force);
  return 0;
}

int cmd_validate_sample(const Common& c, const std::string& store_dir, std::size_t n, std::uint64_t seed) {
  auto st = store::SessionStore::open(store_dir);
  const auto study = pipeline::load_study(*st);
  const auto annotations = load_annotations(*st);
  auto rng = Rng::stream(seed, "validation");
  const auto sample = annotation::draw_validation_sample(pipeline::human_comments(study.rooms), n, rng);
  const auto dir = derived_dir(*st) / "validation";
  const auto stem = fmt::format("sample_n{}_seed{}", n, seed);
  store::write_output(dir / (stem + "_review.tsv"), annotation::validation_review_tsv(sample, annotations), c.force);
  store::write_output(dir / (stem + "_ids.tsv"), annotation::validation_ids_tsv(sample), c.force);
  std::cout << fmt::format("{} comments sampled\nwrote {}\n", sample.size(), (dir / (stem + "_review.tsv")).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ArgumentBot experiment platform"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool catalog_required, bool backend) {
    auto* opt = sub->add_option("--catalog", common.catalog, "Argument catalog (TSV)");
    if (catalog_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--aliases", common.aliases, "Alias table for the mock backend")->check(CLI::ExistingFile);
    if (backend) sub->add_option("--backend", common.backend, "LLM backend")->check(CLI::IsMember({"mock", "live"}));
  };

  std::string config_path, store_dir, out_dir, spec_name = "per_condition";
  std::vector<std::string> outcomes;
  std::optional<std::uint64_t> seed;
  std::uint64_t sample_seed = 1;
  std::size_t sample_n = 100;
  double max_error_rate = 0.05;
  bool raw = false, fsync = false;
  server::ServerOptions server_opts;

  auto* serve = app.add_subcommand("serve", "Run a live experiment over WebSocket");
  serve->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  serve->add_option("--store", store_dir, "New session store directory")->required();
  serve->add_option("--port", server_opts.port);
  serve->add_option("--address", server_opts.address);
  serve->add_option("--gateway-threads", server_opts.gateway_threads);
  serve->add_flag("--fsync", fsync, "fsync after every event");
  add_common(serve, true, true);

  auto* simulate = app.add_subcommand("simulate", "Run scripted agents under a virtual clock");
  simulate->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "Overrides the config seed");
  simulate->add_option("--out", out_dir)->required();
  simulate->add_flag("--force", common.force, "Replace an existing, different output tree");
  add_common(simulate, true, false);

  auto* annotate = app.add_subcommand("annotate", "Label every human comment with catalog arguments");
  annotate->add_option("--store", store_dir)->required()->check(CLI::ExistingDirectory);
  annotate->add_option("--max-error-rate", max_error_rate, "Exit 3 when error-flagged annotations exceed this share");
  annotate->add_flag("--force", common.force);
  add_common(annotate, true, true);

  auto* exp = app.add_subcommand("export", "Write the participant table and exclusion report");
  exp->add_option("--store", store_dir)->required()->check(CLI::ExistingDirectory);
  exp->add_flag("--force", common.force);

  auto* analyze = app.add_subcommand("analyze", "Fit the regression models");
  analyze->add_option("--store", store_dir)->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--spec", spec_name)->check(CLI::IsMember({"per_condition", "pooled"}));
  analyze->add_option("--outcome", outcomes, "Outcome name(s) or 'all'");
  analyze->add_flag("--raw", raw, "Do not z-score the outcome");
  analyze->add_flag("--force", common.force);

  auto* validate = app.add_subcommand("validate-sample", "Draw comments for human validation");
  validate->add_option("--store", store_dir)->required()->check(CLI::ExistingDirectory);
  validate->add_option("--n", sample_n);
  validate->add_option("--seed", sample_seed);
  validate->add_flag("--force", common.force);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(common, config_path, store_dir, server_opts, fsync);
    if (*simulate) return cmd_simulate(common, config_path, seed, out_dir);
    if (*annotate) return cmd_annotate(common, store_dir, max_error_rate);
    if (*exp) return cmd_export(common, store_dir);
    if (*analyze) return cmd_analyze(common, store_dir, spec_name, outcomes.empty() ? std::vector<std::string>{"unique_arguments"} : outcomes, raw);
    if (*validate) return cmd_validate_sample(common, store_dir, sample_n, sample_seed);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
