#include "threec/cli.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "threec/costmodel.hpp"
#include "threec/encoding.hpp"
#include "threec/metrics.hpp"
#include "threec/pipeline.hpp"
#include "threec/seeding.hpp"
#include "threec/synthgen.hpp"

namespace threec {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<double> parse_rhos(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad rho value '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "--rho needs at least one value");
  return out;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-classification clustering: multi-object seed transfer and agglomeration"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic ground truth and elevation stack");
  std::string gen_config, gen_gt, gen_elev;
  std::optional<uint32_t> gen_z, gen_y, gen_x, gen_objects;
  std::optional<uint64_t> gen_seed;
  std::optional<double> gen_gap, gen_noise;
  gen->add_option("--config", gen_config, "generator config (flat JSON)");
  gen->add_option("--gt", gen_gt, "output ground-truth label stack")->required();
  gen->add_option("--elev", gen_elev, "output elevation stack")->required();
  gen->add_option("--z", gen_z);
  gen->add_option("--y", gen_y);
  gen->add_option("--x", gen_x);
  gen->add_option("--objects", gen_objects);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--gap", gen_gap);
  gen->add_option("--noise", gen_noise);

  // seed
  auto* seed = app.add_subcommand("seed", "2-D over-segmentation of an elevation stack");
  std::string seed_elev, seed_out;
  SeedConfig seed_cfg;
  unsigned seed_workers = 1;
  seed->add_option("--elev", seed_elev, "input elevation stack")->required();
  seed->add_option("--out", seed_out, "output seed label stack")->required();
  seed->add_option("--h", seed_cfg.minima_depth, "minima depth")->capture_default_str();
  seed->add_option("--stop", seed_cfg.stop_level, "growth stop level")->capture_default_str();
  seed->add_option("--min-area", seed_cfg.min_seed_area, "minimum seed area")->capture_default_str();
  seed->add_option("--workers", seed_workers)->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "run the full pipeline from a JSON config");
  std::string run_config;
  run->add_option("--config", run_config, "pipeline config (JSON)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "adapted Rand error and variation of information");
  std::string eval_pred, eval_gt;
  bool include_bg = false, seeded_only = false;
  eval->add_option("--pred", eval_pred)->required();
  eval->add_option("--gt", eval_gt)->required();
  eval->add_flag("--include-bg", include_bg, "score voxels whose gt label is 0");
  eval->add_flag("--seeded-only", seeded_only, "score only voxels labeled in pred");

  // cost
  auto* cost = app.add_subcommand("cost", "classifier-call cost model");
  std::string cost_labels, cost_rho;
  uint32_t cost_fov = 9, cost_l = 4;
  cost->add_option("--labels", cost_labels)->required();
  cost->add_option("--fov", cost_fov)->capture_default_str();
  cost->add_option("--l", cost_l)->capture_default_str();
  cost->add_option("--rho", cost_rho, "comma-separated revisit ratios")->required();

  // codebook
  auto* book = app.add_subcommand("codebook", "build and save a codebook");
  uint32_t book_n = 0, book_l = 4, book_r = 1;
  std::optional<uint32_t> book_k;
  uint64_t book_seed = 1;
  std::string book_out;
  book->add_option("--n", book_n, "number of labels")->required();
  book->add_option("--l", book_l)->capture_default_str();
  book->add_option("--k", book_k, "digits (default: minimal + redundancy)");
  book->add_option("--redundancy", book_r)->capture_default_str();
  book->add_option("--seed", book_seed)->capture_default_str();
  book->add_option("--out", book_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      GenConfig cfg = gen_config.empty() ? GenConfig{} : gen_config_from_json(read_text(gen_config));
      if (gen_z) cfg.dims.z = *gen_z;
      if (gen_y) cfg.dims.y = *gen_y;
      if (gen_x) cfg.dims.x = *gen_x;
      if (gen_objects) cfg.n_objects = *gen_objects;
      if (gen_seed) cfg.rng_seed = *gen_seed;
      if (gen_gap) cfg.gap_prob = *gen_gap;
      if (gen_noise) cfg.noise_sigma = *gen_noise;
      auto stack = generate_stack(cfg);
      save_stack(stack.gt, gen_gt);
      save_stack(stack.elevation, gen_elev);
    } else if (*seed) {
      seed_cfg.validate();
      auto elevation = load_scalars(seed_elev);
      auto seeds = seed_volume(elevation, seed_cfg, seed_workers);
      save_stack(seeds.labels, seed_out);
      err << "seeds: " << seeds.global_n << '\n';
    } else if (*run) {
      auto cfg = load_pipeline_config(run_config);
      auto report = run_pipeline(cfg);
      out << "n_seeds\t" << report.n_seeds << "\nk\t" << report.k << "\nclassifier_calls\t"
          << report.classifier_calls << "\nn_components\t" << report.n_components << '\n';
    } else if (*eval) {
      auto pred = load_labels(eval_pred);
      auto gt = load_labels(eval_gt);
      if (seeded_only) gt = restrict_to_labeled(gt, pred);
      auto table = contingency(pred, gt, !include_bg);
      auto rand = adapted_rand_error(table);
      auto vi = variation_of_information(table);
      out << std::setprecision(10) << rand.error << '\t' << rand.precision << '\t' << rand.recall
          << '\t' << vi.vi << '\t' << vi.split << '\t' << vi.merge << '\n';
    } else if (*cost) {
      auto rhos = parse_rhos(cost_rho);
      auto labels = load_labels(cost_labels);
      auto density = object_density_map(labels, cost_fov);
      auto curve = ratio_curve(density, cost_l, rhos);
      out << "rho\ttotal_single\ttotal_3c\tratio\tmax_single_per_pixel\n";
      for (const auto& p : curve)
        out << p.rho << '\t' << p.total_single << '\t' << p.total_3c << '\t'
            << std::setprecision(10) << p.ratio << '\t' << p.max_single << '\n';
    } else if (*book) {
      uint32_t k = book_k.value_or(min_digits(std::max<uint32_t>(book_n, 1), book_l) + book_r);
      auto cb = Codebook::build(book_n, book_l, k, book_seed);
      save_codebook(cb, book_out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace threec
