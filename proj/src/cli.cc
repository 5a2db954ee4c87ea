// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "miaudit/cli.h"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "miaudit/attacks.h"
#include "miaudit/error.h"
#include "miaudit/features.h"
#include "miaudit/file_source.h"
#include "miaudit/io.h"
#include "miaudit/scenarios.h"
#include "miaudit/synth.h"

namespace miaudit {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::optional<int> threads;
  std::size_t mem_budget_mb = 256;
  std::optional<std::uint64_t> seed;
};

KernelOptions ResolveKernelOptions(const GlobalOptions& g) {
  KernelOptions options;
  if (g.threads) {
    options.threads = *g.threads;
  } else if (const char* env = std::getenv("MIAUDIT_THREADS");
             env != nullptr && *env != '\0') {
    const std::string_view text(env);
    int value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw UsageError("MIAUDIT_THREADS must be an integer, got '" +
                       std::string(text) + "'");
    }
    options.threads = value;
  }
  if (g.mem_budget_mb == 0) throw UsageError("--mem-budget must be positive");
  options.mem_budget_bytes = g.mem_budget_mb << 20;
  return options;
}

struct Seed {
  std::uint64_t value = 0;
  bool from_entropy = false;
};

Seed ResolveSeed(const GlobalOptions& g) {
  if (g.seed) return {*g.seed, false};
  std::random_device device;
  const std::uint64_t hi = device();
  return {(hi << 32) | device(), true};
}

Json NewManifest(std::string_view command, const Seed& seed,
                 const KernelOptions& options) {
  Json m;
  m["tool"] = "miaudit";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = seed.value;
  m["seed_source"] = seed.from_entropy ? "entropy" : "flag";
  m["threads"] = options.threads;
  m["mem_budget_bytes"] = options.mem_budget_bytes;
  m["inputs"] = Json::object();
  m["config"] = Json::object();
  m["outputs"] = Json::object();
  return m;
}

Json FileEntry(const fs::path& path) {
  return Json{{"path", path.string()}, {"sha256", FileSha256(path)}};
}

void WriteJson(const Json& json, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << json.dump(2) << "\n";
  out.close();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

fs::path ManifestPath(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

Json EpsilonJson(double epsilon) {
  return std::isinf(epsilon) ? Json("inf") : Json(epsilon);
}

std::pair<std::size_t, std::size_t> ParseShape(const std::string& text) {
  const auto x = text.find('x');
  std::size_t h = 0;
  std::size_t w = 0;
  if (x != std::string::npos) {
    const char* b = text.data();
    auto r1 = std::from_chars(b, b + x, h);
    auto r2 = std::from_chars(b + x + 1, b + text.size(), w);
    if (r1.ec == std::errc() && r1.ptr == b + x && r2.ec == std::errc() &&
        r2.ptr == b + text.size() && h > 0 && w > 0) {
      return {h, w};
    }
  }
  throw UsageError("--image-shape must look like HxW, got '" + text + "'");
}

std::pair<double, double> ParseRange(const std::string& text) {
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    try {
      std::size_t used1 = 0;
      std::size_t used2 = 0;
      const std::string a = text.substr(0, colon);
      const std::string b = text.substr(colon + 1);
      const double lo = std::stod(a, &used1);
      const double hi = std::stod(b, &used2);
      if (used1 == a.size() && used2 == b.size()) return {lo, hi};
    } catch (const std::exception&) {
    }
  }
  throw UsageError("--intensity-range must look like lo:hi, got '" + text +
                   "'");
}

struct DistanceOptions {
  std::string kind = "raw";
  std::string pca_model;
  std::string image_shape;
  std::size_t hog_cell = 7;
  std::size_t hog_bins = 9;
  std::size_t hog_block = 2;
  std::size_t chist_bins = 8;
  std::size_t channels = 3;
  std::string intensity_range = "0:1";

  void Register(CLI::App* app) {
    app->add_option("--distance", kind, "raw, pca, hog or chist")
        ->check(CLI::IsMember({"raw", "pca", "hog", "chist"}));
    app->add_option("--pca-model", pca_model, "model written by fit-pca");
    app->add_option("--image-shape", image_shape, "HxW for hog (default 28x28)");
    app->add_option("--hog-cell", hog_cell);
    app->add_option("--hog-bins", hog_bins);
    app->add_option("--hog-block", hog_block);
    app->add_option("--chist-bins", chist_bins);
    app->add_option("--channels", channels);
    app->add_option("--intensity-range", intensity_range, "lo:hi");
  }

  DistanceSpec Build(Json& manifest) const {
    Json& cfg = manifest["config"]["distance"];
    cfg["kind"] = kind;
    if (kind == "raw") return DistanceSpec::Raw();
    if (kind == "pca") {
      if (pca_model.empty()) {
        throw UsageError("--distance pca needs --pca-model");
      }
      manifest["inputs"]["pca_model"] = FileEntry(pca_model);
      manifest["inputs"]["pca_model_sidecar"] = FileEntry(pca_model + ".json");
      auto model = std::make_shared<PcaModel>(LoadPcaModel(pca_model));
      cfg["k"] = model->k();
      cfg["whiten"] = model->whiten;
      return DistanceSpec::Pca(std::move(model));
    }
    if (kind == "hog") {
      HogParams p;
      if (!image_shape.empty()) {
        std::tie(p.height, p.width) = ParseShape(image_shape);
      }
      p.cell_size = hog_cell;
      p.orientation_bins = hog_bins;
      p.block_size = hog_block;
      cfg["height"] = p.height;
      cfg["width"] = p.width;
      cfg["cell_size"] = p.cell_size;
      cfg["orientation_bins"] = p.orientation_bins;
      cfg["block_size"] = p.block_size;
      return DistanceSpec::Hog(p);
    }
    ChistParams p;
    p.bins_per_channel = chist_bins;
    p.channels = channels;
    std::tie(p.lo, p.hi) = ParseRange(intensity_range);
    cfg["bins_per_channel"] = p.bins_per_channel;
    cfg["channels"] = p.channels;
    cfg["intensity_range"] = {p.lo, p.hi};
    return DistanceSpec::Chist(p);
  }
};

// ---------------------------------------------------------------- fit-pca

struct FitPcaOptions {
  std::string reference;
  std::size_t k = 40;
  std::string out;
  bool whiten = false;
};

int RunFitPca(const FitPcaOptions& o, const GlobalOptions& g,
              std::ostream& out) {
  const KernelOptions options = ResolveKernelOptions(g);
  Json manifest = NewManifest("fit-pca", ResolveSeed(g), options);
  manifest["inputs"]["reference"] = FileEntry(o.reference);
  manifest["config"]["k"] = o.k;
  manifest["config"]["whiten"] = o.whiten;
  const PcaModel model = PcaFit(ReadMatrix(o.reference), o.k, o.whiten);
  SavePcaModel(model, o.out);
  manifest["outputs"]["model"] = FileEntry(o.out);
  manifest["outputs"]["sidecar"] = FileEntry(o.out + ".json");
  WriteJson(manifest, ManifestPath(o.out));
  out << "wrote " << o.out << " (k=" << model.k() << ", dim=" << model.dim()
      << ")\n";
  return kExitOk;
}

// ----------------------------------------------------------------- attack

struct AttackOptions {
  std::string kind;
  std::string records;
  std::string ids;
  std::string samples;
  std::size_t n_samples = 0;
  DistanceOptions distance;
  std::string heuristic = "median";
  double delta = kDefaultDelta;
  std::optional<double> bandwidth;
  bool kde_textbook = false;
  std::string reconstructions;
  std::optional<double> sim_sigma_member;
  std::optional<double> sim_sigma_nonmember;
  std::string membership;
  std::size_t n_reconstructions = 0;
  std::string scores_in;
  std::string out;
};

struct LoadedRecords {
  RecordSet records;
  IdTable table;  // empty when ids were generated
};

LoadedRecords LoadRecords(const AttackOptions& o, Json& manifest) {
  if (o.records.empty()) {
    throw UsageError("--kind " + o.kind + " needs --records");
  }
  manifest["inputs"]["records"] = FileEntry(o.records);
  Matrix data = ReadMatrix(o.records);
  LoadedRecords loaded;
  if (o.ids.empty()) {
    loaded.records = RecordSet::WithIndexIds(std::move(data), "r");
    return loaded;
  }
  manifest["inputs"]["ids"] = FileEntry(o.ids);
  loaded.table = ReadIdTable(o.ids);
  if (loaded.table.size() != data.rows()) {
    throw IdMismatchError("id table has " +
                          std::to_string(loaded.table.size()) +
                          " rows, records file has " +
                          std::to_string(data.rows()));
  }
  std::vector<std::string> ids;
  ids.reserve(loaded.table.size());
  for (const auto& [id, origin] : loaded.table) ids.push_back(id);
  loaded.records = RecordSet(std::move(ids), std::move(data));
  return loaded;
}

// Reads "<dir>/<record id>.miam" for each record.
class FileReconstructionOracle : public ReconstructionOracle {
 public:
  explicit FileReconstructionOracle(fs::path dir) : dir_(std::move(dir)) {}

  fs::path PathFor(std::string_view id) const {
    return dir_ / (std::string(id) + ".miam");
  }

  ReconstructionBatch Reconstruct(std::string_view record_id,
                                  std::span<const double>,
                                  std::size_t) override {
    const fs::path path = PathFor(record_id);
    if (!fs::exists(path)) {
      throw OracleError("no reconstructions at '" + path.string() + "'");
    }
    return ReconstructionBatch(std::string(record_id), ReadMatrix(path));
  }
  bool reentrant() const override { return true; }

 private:
  fs::path dir_;
};

std::unordered_set<std::string> MembersFrom(const IdTable& table) {
  std::unordered_set<std::string> members;
  for (const auto& [id, origin] : table) {
    if (origin == Origin::kClaimedTrain) members.insert(id);
  }
  return members;
}

int RunAttack(const AttackOptions& o, const GlobalOptions& g,
              std::ostream& out) {
  const KernelOptions options = ResolveKernelOptions(g);
  const Seed seed = ResolveSeed(g);
  Json manifest = NewManifest("attack", seed, options);
  Json& cfg = manifest["config"];
  cfg["kind"] = o.kind;

  ScoreVector scores;
  std::optional<double> epsilon;
  if (o.kind == "mc-eps" || o.kind == "mc-d" || o.kind == "kde") {
    if (o.samples.empty()) {
      throw UsageError("--kind " + o.kind + " needs --samples");
    }
    const LoadedRecords loaded = LoadRecords(o, manifest);
    const DistanceSpec spec = o.distance.Build(manifest);
    manifest["inputs"]["samples"] = FileEntry(o.samples);
    FileSampleSource samples(o.samples,
                             RowsWithinBudget(options, loaded.records.cols()));
    if (o.kind == "kde") {
      if (o.n_samples != 0 && o.n_samples != samples.rows()) {
        throw UsageError("--n-samples is only supported by the MC attacks");
      }
      const KdeConfig kde{o.bandwidth, o.kde_textbook};
      const auto result =
          RunKdeAttack(loaded.records, samples, spec, kde, options);
      cfg["bandwidth"] = result.bandwidth;
      cfg["bandwidth_rule"] = o.bandwidth ? "fixed" : "scott";
      cfg["kernel_form"] = o.kde_textbook ? "textbook" : "verbatim";
      cfg["n_samples"] = samples.rows();
      scores = result.scores;
    } else {
      McConfig mc;
      mc.distance = spec;
      mc.heuristic = EpsilonHeuristic::Parse(o.heuristic);
      mc.n_samples = o.n_samples;
      mc.delta = o.delta;
      mc.variant = o.kind == "mc-eps" ? McVariant::kEpsilon
                                      : McVariant::kDistance;
      const auto result = RunMcAttack(loaded.records, samples, mc, options);
      cfg["heuristic"] = mc.heuristic.Name();
      cfg["delta"] = mc.delta;
      cfg["n_samples"] = result.n_samples;
      epsilon = result.epsilon;
      scores = result.scores;
    }
  } else if (o.kind == "rec") {
    const LoadedRecords loaded = LoadRecords(o, manifest);
    std::unique_ptr<ReconstructionOracle> oracle;
    std::size_t n = o.n_reconstructions;
    if (!o.reconstructions.empty()) {
      auto files = std::make_unique<FileReconstructionOracle>(o.reconstructions);
      Json entries = Json::object();
      for (const auto& id : loaded.records.ids()) {
        const fs::path path = files->PathFor(id);
        if (!fs::exists(path)) {
          throw OracleError("no reconstructions for record '" + id +
                            "' at '" + path.string() + "'");
        }
        entries[id] = FileSha256(path);
      }
      manifest["inputs"]["reconstructions"] =
          Json{{"dir", o.reconstructions}, {"sha256", entries}};
      if (n == 0) {
        MatrixFileReader first(files->PathFor(loaded.records.id(0)));
        n = first.header().rows;
      }
      oracle = std::move(files);
      cfg["oracle"] = "files";
    } else if (o.sim_sigma_member && o.sim_sigma_nonmember) {
      IdTable table = loaded.table;
      if (!o.membership.empty()) {
        manifest["inputs"]["membership"] = FileEntry(o.membership);
        table = ReadIdTable(o.membership);
      }
      auto members = MembersFrom(table);
      if (members.empty()) {
        throw UsageError(
            "the simulated oracle needs members: pass --membership or --ids "
            "with 'train' origins");
      }
      if (n == 0) throw UsageError("--n-reconstructions is required");
      oracle = std::make_unique<BiasedReconstructor>(
          std::move(members), *o.sim_sigma_member, *o.sim_sigma_nonmember,
          seed.value);
      cfg["oracle"] = "simulated";
      cfg["sigma_member"] = *o.sim_sigma_member;
      cfg["sigma_nonmember"] = *o.sim_sigma_nonmember;
    } else {
      throw UsageError(
          "--kind rec needs --reconstructions or both --sim-sigma-member and "
          "--sim-sigma-nonmember");
    }
    cfg["n_reconstructions"] = n;
    scores = RunReconstructionAttack(loaded.records, *oracle, n, options);
  } else {  // score-file
    if (o.scores_in.empty()) {
      throw UsageError("--kind score-file needs --scores-in");
    }
    manifest["inputs"]["scores"] = FileEntry(o.scores_in);
    const ScoreVector external = ReadScores(o.scores_in);
    std::vector<std::string> ids;
    if (!o.ids.empty()) {
      manifest["inputs"]["ids"] = FileEntry(o.ids);
      for (const auto& [id, origin] : ReadIdTable(o.ids)) ids.push_back(id);
    } else {
      for (const auto& e : external.entries()) ids.push_back(e.record_id);
    }
    const std::size_t count = ids.size();
    const RecordSet audit(std::move(ids), Matrix(count, 1));
    scores = RunScoreFileAttack(external, audit);
  }

  cfg["distance_name"] = o.kind == "rec" || o.kind == "score-file"
                             ? "none"
                             : o.distance.kind;
  manifest["resolved_epsilon"] = epsilon ? EpsilonJson(*epsilon) : Json();
  manifest["config_digest"] = scores.config_digest();
  WriteScores(scores, o.out);
  manifest["outputs"]["scores"] = FileEntry(o.out);
  WriteJson(manifest, ManifestPath(o.out));
  out << "scored " << scores.size() << " records";
  if (epsilon) out << " (epsilon=" << *epsilon << ")";
  out << " -> " << o.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- scenario

struct ScenarioOptions {
  std::string scores;
  std::string membership;
  std::size_t m = 0;
  std::size_t trials = 10;
  std::string out;
};

// Attack metadata carried over from the score file's manifest, if any.
void FillFromScoreManifest(const fs::path& scores_path,
                           AggregateReport& report) {
  report.attack = "unknown";
  report.distance = "unknown";
  report.heuristic = "none";
  const fs::path path = ManifestPath(scores_path);
  if (!fs::exists(path)) return;
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(ReadFileToString(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest '" + path.string() +
                      "': " + e.what());
  }
  const auto& cfg = m.value("config", nlohmann::json::object());
  report.attack = cfg.value("kind", report.attack);
  report.distance = cfg.value("distance_name", report.distance);
  report.heuristic = cfg.value("heuristic", report.heuristic);
  if (cfg.contains("n_samples")) {
    report.n_samples = cfg["n_samples"].get<std::uint64_t>();
  }
}

std::optional<double> ManifestEpsilon(const fs::path& scores_path) {
  const fs::path path = ManifestPath(scores_path);
  if (!fs::exists(path)) return std::nullopt;
  const auto m = nlohmann::json::parse(ReadFileToString(path), nullptr, false);
  if (m.is_discarded() || !m.contains("resolved_epsilon")) return std::nullopt;
  const auto& e = m["resolved_epsilon"];
  if (e.is_number()) return e.get<double>();
  if (e.is_string() && e.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  return std::nullopt;
}

int RunScenario(const ScenarioOptions& o, const GlobalOptions& g,
                std::ostream& out) {
  const KernelOptions options = ResolveKernelOptions(g);
  const Seed seed = ResolveSeed(g);
  Json manifest = NewManifest("scenario", seed, options);
  manifest["inputs"]["scores"] = FileEntry(o.scores);
  manifest["inputs"]["membership"] = FileEntry(o.membership);

  const ScoreVector scores = ReadScores(o.scores);
  const IdTable table = ReadIdTable(o.membership);
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> all_ids;
  for (const auto& [id, origin] : table) {
    if (origin == Origin::kClaimedTrain) train_ids.push_back(id);
    if (origin == Origin::kClaimedTest) test_ids.push_back(id);
    if (origin != Origin::kUnlabeled) all_ids.push_back(id);
  }
  for (const auto& id : all_ids) {
    if (!scores.Find(id)) {
      throw IdMismatchError("no score for record '" + id + "'");
    }
  }
  std::size_t m = o.m;
  if (m == 0) {
    if (train_ids.size() != test_ids.size()) {
      throw ImbalanceError("membership lists " +
                           std::to_string(train_ids.size()) + " train and " +
                           std::to_string(test_ids.size()) +
                           " test records; pass --M to subsample");
    }
    m = train_ids.size();
  }
  const std::size_t n_train = train_ids.size();
  const std::size_t n_test = test_ids.size();
  PoolProvider provider(RecordSet(std::move(train_ids), Matrix(n_train, 1)),
                        RecordSet(std::move(test_ids), Matrix(n_test, 1)));
  const std::optional<double> epsilon = ManifestEpsilon(o.scores);
  const AttackRunner runner = [&](const TrialData& data, std::uint64_t) {
    std::vector<std::string> ids = data.train.ids();
    ids.insert(ids.end(), data.test.ids().begin(), data.test.ids().end());
    return AttackOutcome{scores.Restrict(ids), epsilon};
  };
  ScenarioConfig config;
  config.m = m;
  config.trials = o.trials;
  config.seed = seed.value;
  config.threads = options.threads;
  AggregateReport report = RunTrials(runner, provider, config);
  FillFromScoreManifest(o.scores, report);

  manifest["config"]["M"] = m;
  manifest["config"]["trials"] = o.trials;
  Json digest;
  digest["scores_sha256"] = manifest["inputs"]["scores"]["sha256"];
  digest["membership_sha256"] = manifest["inputs"]["membership"]["sha256"];
  digest["M"] = m;
  digest["trials"] = o.trials;
  digest["seed"] = seed.value;
  digest["attack_config"] = scores.config_digest();
  report.config_digest = digest.dump();

  WriteJson(report.ToJson(), o.out);
  manifest["outputs"]["report"] = FileEntry(o.out);
  WriteJson(manifest, ManifestPath(o.out));
  out << "single " << report.single_mean << " +- " << report.single_std
      << ", set " << report.set_mean << " +- " << report.set_std << " over "
      << report.trials << " trials -> " << o.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
  std::size_t dim = 40;
  std::size_t components = 10;
  double spread = 3.0;
  double component_std = 1.0;
  std::size_t train_pool_size = 1000;
  std::size_t test_pool_size = 1000;
  std::string train_pool;
  double rho = 0.0;
  double sigma = 0.5;
  std::size_t n = 10000;
  std::string out_dir;
  std::string dtype = "f32";
  std::size_t recon_n = 0;
  double recon_sigma_member = 0.5;
  double recon_sigma_nonmember = 1.0;
};

int RunSimulate(const SimulateOptions& o, const GlobalOptions& g,
                std::ostream& out) {
  const KernelOptions options = ResolveKernelOptions(g);
  const Seed seed = ResolveSeed(g);
  Json manifest = NewManifest("simulate", seed, options);
  Json& cfg = manifest["config"];
  cfg["dim"] = o.dim;
  cfg["components"] = o.components;
  cfg["spread"] = o.spread;
  cfg["component_std"] = o.component_std;
  cfg["test_pool_size"] = o.test_pool_size;
  cfg["rho"] = o.rho;
  cfg["sigma"] = o.sigma;
  cfg["n"] = o.n;
  cfg["dtype"] = o.dtype;
  const DType dtype = o.dtype == "f32" ? DType::kFloat32 : DType::kFloat64;

  const GaussianMixture population =
      GaussianMixture::Isotropic(o.dim, o.components, o.spread,
                                 o.component_std, DeriveSeed(seed.value, 0));
  Matrix train;
  if (!o.train_pool.empty()) {
    manifest["inputs"]["train_pool"] = FileEntry(o.train_pool);
    train = ReadMatrix(o.train_pool);
  } else {
    cfg["train_pool_size"] = o.train_pool_size;
    train = population.DrawRows(o.train_pool_size, DeriveSeed(seed.value, 1),
                                options);
  }
  const Matrix test = population.DrawRows(o.test_pool_size,
                                          DeriveSeed(seed.value, 2), options);
  const MemorizingGenerator generator{train, o.rho, o.sigma, population,
                                      DeriveSeed(seed.value, 3)};
  const SampleMatrix samples = Generate(generator, o.n, options);

  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  WriteMatrix(samples.data, dir / "samples.miam", dtype);
  manifest["outputs"]["samples"] = FileEntry(dir / "samples.miam");

  IdTable table;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    table.emplace_back("tr" + std::to_string(i), Origin::kClaimedTrain);
  }
  for (std::size_t i = 0; i < test.rows(); ++i) {
    table.emplace_back("te" + std::to_string(i), Origin::kClaimedTest);
  }
  if (!table.empty()) {
    Matrix records = train.rows() == 0  ? test
                     : test.rows() == 0 ? train
                                        : VStack(train.view(), test.view());
    WriteMatrix(records, dir / "records.miam", dtype);
    WriteIdTable(table, dir / "records.ids.csv");
    manifest["outputs"]["records"] = FileEntry(dir / "records.miam");
    manifest["outputs"]["ids"] = FileEntry(dir / "records.ids.csv");

    if (o.recon_n > 0) {
      cfg["recon_n"] = o.recon_n;
      cfg["recon_sigma_member"] = o.recon_sigma_member;
      cfg["recon_sigma_nonmember"] = o.recon_sigma_nonmember;
      // Reconstruct the records as written, so a later attack on
      // records.miam sees the same rows.
      const Matrix stored = ReadMatrix(dir / "records.miam");
      BiasedReconstructor oracle(MembersFrom(table), o.recon_sigma_member,
                                 o.recon_sigma_nonmember,
                                 DeriveSeed(seed.value, 4));
      fs::create_directories(dir / "recon");
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto batch =
            oracle.Reconstruct(table[i].first, stored.row(i), o.recon_n);
        WriteMatrix(batch.reconstructions(),
                    dir / "recon" / (table[i].first + ".miam"), dtype);
      }
      manifest["outputs"]["reconstructions"] = (dir / "recon").string();
    }
  }
  WriteJson(manifest, dir / "manifest.json");
  out << "wrote " << o.n << " samples and " << table.size() << " records to "
      << dir.string() << "\n";
  return kExitOk;
}

// ----------------------------------------------------------- report merge

struct MergeOptions {
  std::vector<std::string> inputs;
  std::string out;
};

int RunMerge(const MergeOptions& o, std::ostream& out) {
  if (o.inputs.size() < 2) {
    throw UsageError("report merge needs at least two reports");
  }
  auto load = [](const std::string& path) {
    try {
      return AggregateReport::FromJson(
          nlohmann::json::parse(ReadFileToString(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("'" + path + "' is not JSON: " + e.what());
    }
  };
  AggregateReport merged = load(o.inputs[0]);
  for (std::size_t i = 1; i < o.inputs.size(); ++i) {
    merged = MergeReports(merged, load(o.inputs[i]));
  }
  WriteJson(merged.ToJson(), o.out);
  out << "merged " << merged.trials << " trials -> " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Membership-inference audits of generative models", "miaudit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "worker threads (default: MIAUDIT_THREADS or all cores)");
  app.add_option("--mem-budget", global.mem_budget_mb,
                 "sample chunk budget in MB")
      ->capture_default_str();
  app.add_option("--seed", global.seed,
                 "random seed (default: drawn from entropy and recorded)");

  FitPcaOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit-pca", "fit a PCA distance model");
  fit_cmd->add_option("--reference", fit.reference)->required();
  fit_cmd->add_option("--k", fit.k)->capture_default_str();
  fit_cmd->add_option("--out", fit.out)->required();
  fit_cmd->add_flag("--whiten", fit.whiten);

  AttackOptions attack;
  CLI::App* attack_cmd = app.add_subcommand("attack", "score records");
  attack_cmd->add_option("--kind", attack.kind)
      ->required()
      ->check(CLI::IsMember({"mc-eps", "mc-d", "kde", "rec", "score-file"}));
  attack_cmd->add_option("--records", attack.records, "record matrix");
  attack_cmd->add_option("--ids", attack.ids, "CSV record_id,origin");
  attack_cmd->add_option("--samples", attack.samples, "sample matrix");
  attack_cmd->add_option("--n-samples", attack.n_samples,
                         "use the first n samples (0: all)");
  attack.distance.Register(attack_cmd);
  attack_cmd->add_option("--heuristic", attack.heuristic,
                         "median, percentile:<p> or fixed:<eps>")
      ->capture_default_str();
  attack_cmd->add_option("--delta", attack.delta)->capture_default_str();
  attack_cmd->add_option("--bandwidth", attack.bandwidth);
  attack_cmd->add_flag("--kde-textbook", attack.kde_textbook);
  attack_cmd->add_option("--reconstructions", attack.reconstructions,
                         "directory of <id>.miam files");
  attack_cmd->add_option("--sim-sigma-member", attack.sim_sigma_member);
  attack_cmd->add_option("--sim-sigma-nonmember", attack.sim_sigma_nonmember);
  attack_cmd->add_option("--membership", attack.membership,
                         "CSV record_id,origin for the simulated oracle");
  attack_cmd->add_option("--n-reconstructions", attack.n_reconstructions);
  attack_cmd->add_option("--scores-in", attack.scores_in);
  attack_cmd->add_option("--out", attack.out)->required();

  ScenarioOptions scenario;
  CLI::App* scenario_cmd =
      app.add_subcommand("scenario", "run single and set MI trials");
  scenario_cmd->add_option("--scores", scenario.scores)->required();
  scenario_cmd->add_option("--membership", scenario.membership)->required();
  scenario_cmd->add_option("--M", scenario.m,
                           "records per set (default: all members)");
  scenario_cmd->add_option("--trials", scenario.trials)->capture_default_str();
  scenario_cmd->add_option("--out", scenario.out)->required();

  SimulateOptions sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "emit synthetic records and samples");
  sim_cmd->add_option("--dim", sim.dim)->capture_default_str();
  sim_cmd->add_option("--components", sim.components)->capture_default_str();
  sim_cmd->add_option("--spread", sim.spread)->capture_default_str();
  sim_cmd->add_option("--component-std", sim.component_std)
      ->capture_default_str();
  sim_cmd->add_option("--train-pool-size", sim.train_pool_size)
      ->capture_default_str();
  sim_cmd->add_option("--test-pool-size", sim.test_pool_size)
      ->capture_default_str();
  sim_cmd->add_option("--train-pool", sim.train_pool,
                      "matrix file used as the train pool");
  sim_cmd->add_option("--rho", sim.rho)->capture_default_str();
  sim_cmd->add_option("--sigma", sim.sigma)->capture_default_str();
  sim_cmd->add_option("--n", sim.n)->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir)->required();
  sim_cmd->add_option("--dtype", sim.dtype)
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  sim_cmd->add_option("--recon-n", sim.recon_n,
                      "also write n reconstructions per record");
  sim_cmd->add_option("--recon-sigma-member", sim.recon_sigma_member)
      ->capture_default_str();
  sim_cmd->add_option("--recon-sigma-nonmember", sim.recon_sigma_nonmember)
      ->capture_default_str();

  MergeOptions merge;
  CLI::App* report_cmd = app.add_subcommand("report", "report utilities");
  report_cmd->require_subcommand(1);
  CLI::App* merge_cmd =
      report_cmd->add_subcommand("merge", "concatenate scenario reports");
  merge_cmd->add_option("inputs", merge.inputs)->required();
  merge_cmd->add_option("--out", merge.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return RunFitPca(fit, global, out);
    if (*attack_cmd) return RunAttack(attack, global, out);
    if (*scenario_cmd) return RunScenario(scenario, global, out);
    if (*sim_cmd) return RunSimulate(sim, global, out);
    if (*merge_cmd) return RunMerge(merge, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << e.kind() << ": " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace miaudit
