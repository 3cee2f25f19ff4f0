#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphtp/pipeline.hpp"

namespace {

using namespace graphtp;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  std::string out, edges, features, labels, scheme;
  std::optional<std::size_t> k, epochs, warmup, embed_dim;
  std::optional<double> alpha;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "config file (key = value with [sections])");
  cmd->add_option("--seed", f.seed, "master seed")->required();
  cmd->add_option("--set", f.sets, "override, section.key=value (repeatable)");
  cmd->add_option("-o,--out", f.out, "output directory");
  cmd->add_option("--edges", f.edges, "edge list");
  cmd->add_option("--features", f.features, "feature matrix (.csv or TGM1)");
  cmd->add_option("--labels", f.labels, "label file");
  cmd->add_option("--scheme", f.scheme, "topology scheme: none|feature|spectral");
  cmd->add_option("--k", f.k, "neighbors kept per node in the topology view");
  cmd->add_option("--alpha", f.alpha, "eigenvalue exponent for the spectral scheme");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--warmup", f.warmup, "epochs trained without negative filtering");
  cmd->add_option("--embed-dim", f.embed_dim, "embedding width");
}

RunConfig resolve(const CommonFlags& f) {
  ConfigMap m;
  if (!f.config.empty()) m = parse_config_file(f.config);
  std::vector<std::string> sets;
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) sets.push_back(std::string(key) + "=" + v);
  };
  put("output.dir", f.out);
  put("data.edges", f.edges);
  put("data.features", f.features);
  put("data.labels", f.labels);
  put("topology.scheme", f.scheme);
  if (f.k) put("topology.k", std::to_string(*f.k));
  if (f.alpha) put("topology.alpha", detail::format_double(*f.alpha));
  if (f.epochs) put("train.epochs", std::to_string(*f.epochs));
  if (f.warmup) put("train.warmup", std::to_string(*f.warmup));
  if (f.embed_dim) put("encoder.embed_dim", std::to_string(*f.embed_dim));
  sets.insert(sets.end(), f.sets.begin(), f.sets.end());
  sets.push_back("seed=" + std::to_string(f.seed));
  apply_overrides(m, sets);
  RunConfig cfg = config_from_map(m);
  if (const char* t = std::getenv("GRAPHTP_THREADS")) {
    try {
      cfg.probe.threads = std::max<std::size_t>(1, std::stoul(t));
    } catch (const std::exception&) {
      throw InvalidParameter(std::string("GRAPHTP_THREADS: not a number: ") + t);
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphtp: contrastive node embeddings with topology reorganization"};
  app.require_subcommand(1);

  CommonFlags aug_f, train_f, eval_f, abl_f;
  auto* augment = app.add_subcommand("augment", "build and cache the topology view");
  add_common(augment, aug_f);

  auto* train_cmd = app.add_subcommand("train", "train the encoder");
  add_common(train_cmd, train_f);
  bool warmup_only = false;
  std::string resume;
  train_cmd->add_flag("--warmup-only", warmup_only, "never filter negatives (warm-up for all epochs)");
  train_cmd->add_option("--resume", resume, "checkpoint directory to continue from");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate stored embeddings");
  add_common(eval_cmd, eval_f);
  std::string embeddings;
  bool shuffle = false;
  eval_cmd->add_option("--embeddings", embeddings, "embedding matrix (TGM1)")->required();
  eval_cmd->add_flag("--shuffle-labels", shuffle, "permute labels before evaluating");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate the six variants");
  add_common(ablate, abl_f);
  std::vector<std::uint64_t> seeds;
  ablate->add_option("--seeds", seeds, "seeds to run (default: --seed)")->delimiter(',');

  auto* sbm = app.add_subcommand("sbm-gen", "write a stochastic block model dataset");
  SbmParams sp;
  std::string sbm_out;
  bool csv = false;
  sbm->add_option("--seed", sp.seed, "generator seed")->required();
  sbm->add_option("--nodes", sp.num_nodes, "node count")->required();
  sbm->add_option("--blocks", sp.num_blocks, "block count")->required();
  sbm->add_option("--p-in", sp.p_in, "intra-block edge probability")->required();
  sbm->add_option("--p-out", sp.p_out, "inter-block edge probability")->required();
  sbm->add_option("--dim", sp.feature_dim, "feature dimension")->required();
  sbm->add_option("--noise", sp.feature_noise, "feature noise std");
  sbm->add_option("-o,--out", sbm_out, "output directory")->required();
  sbm->add_flag("--csv", csv, "write features as CSV instead of TGM1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (augment->parsed()) {
      cmd_augment(resolve(aug_f), std::cout);
    } else if (train_cmd->parsed()) {
      TrainOptions opt;
      opt.warmup_only = warmup_only;
      if (!resume.empty()) opt.resume = resume;
      cmd_train(resolve(train_f), opt, std::cout);
    } else if (eval_cmd->parsed()) {
      cmd_eval(resolve(eval_f), embeddings, shuffle, std::cout);
    } else if (ablate->parsed()) {
      RunConfig cfg = resolve(abl_f);
      if (!seeds.empty()) cfg.ablate_seeds = seeds;
      cmd_ablate(cfg, std::cout);
    } else if (sbm->parsed()) {
      const Graph g = generate_sbm(sp);
      const fs::path dir = sbm_out;
      save_graph(g, dir / "edges.txt", dir / (csv ? "features.csv" : "features.tgm"), dir / "labels.txt");
      std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << dir.string() << '\n';
    }
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
