// Command-line front door for the CKA toolkit: property verification,
// similarity between feature dumps, layer heatmaps, and the toy
// distillation sweep. Exit codes: 0 success, 1 property/validation
// failure, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cka/cka.hpp"

namespace fs = std::filesystem;

namespace {

void print_value(const char* name, double v) {
  std::printf("%s %.17g\n", name, v);
}

struct VerifyArgs {
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::string inject;
};

int run_verify(const VerifyArgs& args) {
  cka::VerifyOptions opt;
  opt.trials = args.trials;
  opt.seed = args.seed;
  opt.negate_numerator = args.inject == "negate-numerator";
  const std::vector<cka::PropertyResult> results = cka::run_verification(opt);
  const cka::PropertyResult* first_failure = nullptr;
  for (const cka::PropertyResult& r : results) {
    std::printf("%s  %s  max deviation %.17g  (tolerance %g)\n",
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.max_deviation,
                r.tolerance);
    if (!r.passed && first_failure == nullptr) first_failure = &r;
  }
  if (first_failure != nullptr) {
    std::printf("FAILED: %s\n", first_failure->name.c_str());
    return 1;
  }
  std::printf("all properties passed (trials %zu, seed %llu)\n", args.trials,
              static_cast<unsigned long long>(args.seed));
  return 0;
}

struct SimilarityArgs {
  std::string path_a;
  std::string path_b;
  bool flatten = false;
  bool no_center = false;
  bool allow_nonfinite = false;
  std::string patch;  // "PH,PW"
  double gamma = 10.0;
};

cka::PatchConfig parse_patch(const std::string& s) {
  unsigned long ph = 0, pw = 0;
  char trailing = 0;
  if (std::sscanf(s.c_str(), "%lu,%lu%c", &ph, &pw, &trailing) != 2 || ph == 0 ||
      pw == 0) {
    throw CLI::ValidationError("--patch", "expected PH,PW with positive integers");
  }
  return cka::PatchConfig{ph, pw};
}

int run_similarity(const SimilarityArgs& args) {
  const cka::CkaConfig cfg{!args.no_center, 1e-30};
  const cka::Tensor a = cka::read_dump(args.path_a, args.allow_nonfinite);
  const cka::Tensor b = cka::read_dump(args.path_b, args.allow_nonfinite);
  if (a.ndim() != b.ndim()) {
    throw cka::DimensionError("dumps have different ranks: " +
                              std::to_string(a.ndim()) + " vs " +
                              std::to_string(b.ndim()));
  }

  bool want_pcka = !args.patch.empty();
  cka::PatchConfig pc;
  if (want_pcka) pc = parse_patch(args.patch);

  if (a.ndim() == 2) {
    if (want_pcka) {
      throw cka::DimensionError("--patch needs 4-D dumps, got 2-D");
    }
    const cka::Matrix ma = a.as_matrix();
    const cka::Matrix mb = b.as_matrix();
    print_value("cka", cka::cka(ma, mb, cfg));
    const cka::MmdDecomposition d = cka::mmd_decomposition(ma, mb, cfg);
    print_value("mmd_cka", d.cka);
    print_value("pairwise_term", d.pairwise_term);
    print_value("jensen_bound", d.jensen_bound);
    return 0;
  }
  if (a.ndim() == 4) {
    if (!args.flatten && !want_pcka) {
      throw cka::DimensionError(
          "4-D dumps need --flatten (sample-level CKA) and/or --patch PH,PW");
    }
    const cka::FeatureMap fa = a.as_feature_map();
    const cka::FeatureMap fb = b.as_feature_map();
    if (args.flatten) {
      const cka::Matrix ma = fa.flatten();
      const cka::Matrix mb = fb.flatten();
      print_value("cka", cka::cka(ma, mb, cfg));
      const cka::MmdDecomposition d = cka::mmd_decomposition(ma, mb, cfg);
      print_value("mmd_cka", d.cka);
      print_value("pairwise_term", d.pairwise_term);
      print_value("jensen_bound", d.jensen_bound);
    }
    if (want_pcka) {
      const cka::LossReport r = cka::pcka_loss(fb, fa, pc, args.gamma, cfg);
      print_value("pcka_loss", r.value);
      if (!r.skipped_slices.empty()) {
        std::printf("skipped_channels %zu\n", r.skipped_slices.size());
      }
    }
    return 0;
  }
  throw cka::DimensionError("similarity expects 2-D or 4-D dumps, got " +
                            std::to_string(a.ndim()) + "-D");
}

struct HeatmapArgs {
  std::string dir_a;
  std::string dir_b;
  std::string out_csv;
  bool no_center = false;
  bool allow_nonfinite = false;
};

std::vector<fs::path> list_dumps(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw cka::IoError("not a directory: " + dir);
  }
  std::vector<fs::path> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".fdmp") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& x, const fs::path& y) {
              return x.filename().string() < y.filename().string();
            });
  if (files.empty()) throw cka::IoError("no .fdmp files in " + dir);
  return files;
}

// Loads every dump in the directory as a probe matrix (2-D as-is, 4-D
// flattened). All failures are collected so the user sees the full list.
std::vector<cka::Matrix> load_layers(const std::vector<fs::path>& files,
                                     bool allow_nonfinite,
                                     std::vector<std::string>& errors) {
  std::vector<cka::Matrix> layers;
  for (const fs::path& p : files) {
    try {
      const cka::Tensor t = cka::read_dump(p.string(), allow_nonfinite);
      if (t.ndim() == 2) {
        layers.push_back(t.as_matrix());
      } else if (t.ndim() == 4) {
        layers.push_back(t.as_feature_map().flatten());
      } else {
        throw cka::DimensionError("rank " + std::to_string(t.ndim()) +
                                  " dump not usable as a layer");
      }
    } catch (const cka::Error& e) {
      errors.push_back(e.what());
    }
  }
  return layers;
}

int run_heatmap(const HeatmapArgs& args) {
  const std::vector<fs::path> files_a = list_dumps(args.dir_a);
  const std::vector<fs::path> files_b = list_dumps(args.dir_b);
  std::vector<std::string> errors;
  const std::vector<cka::Matrix> layers_a =
      load_layers(files_a, args.allow_nonfinite, errors);
  const std::vector<cka::Matrix> layers_b =
      load_layers(files_b, args.allow_nonfinite, errors);
  if (!errors.empty()) {
    for (const std::string& e : errors) std::fprintf(stderr, "error: %s\n", e.c_str());
    return 1;
  }
  const cka::CkaConfig cfg{!args.no_center, 1e-30};
  // Built fully in memory before any write, so a failed entry never leaves
  // a partial CSV behind.
  const cka::Matrix m = cka::layer_cka_matrix(layers_a, layers_b, cfg);
  std::vector<std::string> row_labels, col_labels;
  for (const fs::path& p : files_a) row_labels.push_back(p.filename().string());
  for (const fs::path& p : files_b) col_labels.push_back(p.filename().string());
  cka::export_csv(m, args.out_csv, row_labels, col_labels);
  std::printf("wrote %zux%zu heatmap to %s\n", m.rows(), m.cols(),
              args.out_csv.c_str());
  return 0;
}

struct DistillArgs {
  std::vector<std::string> modes{"ce", "kd", "rcka"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7};
  double alpha = 5.0;
  double beta = 5.0;
  double gamma = 10.0;
  double tau = 4.0;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.03;
  std::size_t teacher_hidden = 64;
  std::size_t student_hidden = 8;
  std::uint64_t data_seed = 0;
  std::uint64_t teacher_seed = 100;
  bool no_center = false;
  std::string out_dir = "distill_out";
};

int run_distill(const DistillArgs& args) {
  cka::BlobConfig blob;
  blob.seed = args.data_seed;
  const cka::BlobDataset data = cka::make_blobs(blob);

  cka::TrainConfig teacher_cfg;
  teacher_cfg.seed = args.teacher_seed;
  const cka::TinyNet teacher = cka::train_teacher(data, args.teacher_hidden, teacher_cfg);
  std::printf("teacher test accuracy %.17g\n",
              cka::accuracy(cka::forward(teacher, data.test_x).logits, data.test_y));

  cka::TrainConfig base;
  base.weights = cka::LossWeights{args.alpha, args.beta, args.gamma, args.tau};
  base.cka_cfg = cka::CkaConfig{!args.no_center, 1e-30};
  base.epochs = args.epochs;
  base.batch_size = args.batch_size;
  base.learning_rate = args.lr;
  base.student_hidden = args.student_hidden;

  std::vector<cka::TrainMode> modes;
  for (const std::string& m : args.modes) modes.push_back(cka::parse_train_mode(m));

  const cka::SweepSummary sweep = cka::run_seed_sweep(teacher, data, base, modes, args.seeds);

  fs::create_directories(args.out_dir);
  for (const cka::TrainReport& r : sweep.reports) {
    const std::string path = args.out_dir + "/report_" + cka::to_string(r.mode) +
                             "_seed" + std::to_string(r.seed) + ".csv";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw cka::IoError("cannot open for writing: " + path);
    f << cka::report_to_csv(r);
  }
  {
    const std::string path = args.out_dir + "/summary.csv";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw cka::IoError("cannot open for writing: " + path);
    f << cka::sweep_summary_to_csv(sweep);
  }

  for (const cka::ModeSummary& m : sweep.modes) {
    std::printf("mode %s: median accuracy %.17g (min %.17g, max %.17g, %zu/%zu seeds ok)\n",
                cka::to_string(m.mode).c_str(), m.median_accuracy, m.min_accuracy,
                m.max_accuracy, m.final_accuracies.size(),
                m.final_accuracies.size() + m.failures.size());
    for (const auto& [seed, why] : m.failures) {
      std::fprintf(stderr, "seed %llu failed: %s\n",
                   static_cast<unsigned long long>(seed), why.c_str());
    }
  }
  std::printf("reports written to %s\n", args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CKA similarity toolkit: verification, feature-dump analysis, toy distillation"};
  app.require_subcommand(1);

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "verify", "re-derive the similarity identities on random instances");
  verify->add_option("--trials", verify_args.trials, "instances per property")
      ->default_val(500)
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_args.seed, "RNG seed")->default_val(0);
  verify->add_option("--inject", verify_args.inject)->group("");  // fault injection, hidden

  SimilarityArgs sim_args;
  CLI::App* similarity = app.add_subcommand(
      "similarity", "CKA and its decomposition between two feature dumps");
  similarity->add_option("dump_a", sim_args.path_a, "first FDMP file")->required();
  similarity->add_option("dump_b", sim_args.path_b, "second FDMP file")->required();
  similarity->add_flag("--flatten", sim_args.flatten,
                       "flatten 4-D dumps to (batch, c*h*w)");
  similarity->add_flag("--no-center", sim_args.no_center, "skip column centering");
  similarity->add_flag("--allow-nonfinite", sim_args.allow_nonfinite,
                       "accept NaN/Inf payloads");
  similarity->add_option("--patch", sim_args.patch,
                         "PH,PW: also report the patch-CKA loss (4-D dumps)");
  similarity->add_option("--gamma", sim_args.gamma, "patch loss weight")
      ->default_val(10.0);

  HeatmapArgs heat_args;
  CLI::App* heatmap = app.add_subcommand(
      "heatmap", "pairwise layer CKA between two dump directories, as CSV");
  heatmap->add_option("dir_a", heat_args.dir_a, "directory of .fdmp layers")->required();
  heatmap->add_option("dir_b", heat_args.dir_b, "directory of .fdmp layers")->required();
  heatmap->add_option("out_csv", heat_args.out_csv, "output CSV path")->required();
  heatmap->add_flag("--no-center", heat_args.no_center, "skip column centering");
  heatmap->add_flag("--allow-nonfinite", heat_args.allow_nonfinite,
                    "accept NaN/Inf payloads");

  DistillArgs dist_args;
  CLI::App* distill = app.add_subcommand(
      "distill", "train a toy teacher, then distill students across seeds");
  distill->add_option("--mode", dist_args.modes, "training modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"ce", "kd", "rcka"}));
  distill->add_option("--seeds", dist_args.seeds, "student seeds")->delimiter(',');
  distill->add_option("--alpha", dist_args.alpha, "feature-CKA weight")->default_val(5.0);
  distill->add_option("--beta", dist_args.beta, "logit-CKA weight")->default_val(5.0);
  distill->add_option("--gamma", dist_args.gamma, "patch-CKA weight")->default_val(10.0);
  distill->add_option("--tau", dist_args.tau, "KD temperature")
      ->default_val(4.0)
      ->check(CLI::PositiveNumber);
  distill->add_option("--epochs", dist_args.epochs)->default_val(30);
  distill->add_option("--batch-size", dist_args.batch_size)->default_val(32);
  distill->add_option("--lr", dist_args.lr)->default_val(0.03);
  distill->add_option("--teacher-hidden", dist_args.teacher_hidden)->default_val(64);
  distill->add_option("--student-hidden", dist_args.student_hidden)->default_val(8);
  distill->add_option("--data-seed", dist_args.data_seed)->default_val(0);
  distill->add_option("--teacher-seed", dist_args.teacher_seed)->default_val(100);
  distill->add_flag("--no-center", dist_args.no_center,
                    "skip column centering inside CKA losses");
  distill->add_option("--out-dir", dist_args.out_dir, "where report CSVs go")
      ->default_val("distill_out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify) return run_verify(verify_args);
    if (*similarity) return run_similarity(sim_args);
    if (*heatmap) return run_heatmap(heat_args);
    if (*distill) return run_distill(dist_args);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const cka::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
