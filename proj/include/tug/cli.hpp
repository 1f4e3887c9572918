#pragma once

#include <csignal>
#include <set>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tug/config.hpp"
#include "tug/datastore.hpp"
#include "tug/dictionary.hpp"
#include "tug/embeddings.hpp"
#include "tug/lexicon.hpp"
#include "tug/llm.hpp"
#include "tug/lobby.hpp"
#include "tug/metrics.hpp"
#include "tug/model.hpp"
#include "tug/remote_embeddings.hpp"
#include "tug/server.hpp"
#include "tug/simgen.hpp"
#include "tug/synthetic_embeddings.hpp"

namespace tug::cli {

namespace fs = std::filesystem;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : text::split(s, ',')) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "bad threshold '" + t + "'");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  f << body;
  if (!f) throw Error(ErrorCode::io_error, "write failed for " + path);
}

inline std::string train_report_tsv(const model::TrainReport& r) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\ttrain_mse\tval_loss\tval_mse\n";
  for (const auto& e : r.epochs) {
    out << e.epoch << '\t' << embeddings::format_double(e.train_loss) << '\t' << embeddings::format_double(e.train_mse)
        << '\t' << embeddings::format_double(e.val_loss) << '\t' << embeddings::format_double(e.val_mse) << '\n';
  }
  out << "# best_epoch " << r.best_epoch << " best_val_loss " << embeddings::format_double(r.best_val_loss)
      << (r.stopped_early ? " early_stop" : "") << '\n';
  return out.str();
}

inline model::TrainConfig train_config(const config::Config& c) {
  model::TrainConfig t;
  t.alpha = c.alpha;
  t.learning_rate = c.learning_rate;
  if (c.batch_size < 1 || c.patience < 1 || c.max_epochs < 1) {
    throw Error(ErrorCode::invalid_argument, "batch_size, patience and max_epochs must be positive");
  }
  t.batch_size = static_cast<std::size_t>(c.batch_size);
  t.patience = static_cast<std::size_t>(c.patience);
  t.max_epochs = static_cast<std::size_t>(c.max_epochs);
  t.seed = c.seed;
  return t;
}

struct Predictions {
  std::vector<double> preds;
  std::vector<double> labels;
};

inline Predictions predict_all(const model::EncoderParams& params, const std::vector<model::PairFeatures>& feats) {
  Predictions p;
  for (const auto& f : feats) {
    p.preds.push_back(model::predict(params, f.x1, f.x2).y_hat);
    p.labels.push_back(f.y);
  }
  return p;
}

inline std::vector<model::PairFeatures> select(const std::vector<model::PairFeatures>& all,
                                               const std::vector<std::size_t>& idx) {
  std::vector<model::PairFeatures> out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

inline std::string evaluation_report(const model::EncoderParams& params, const std::vector<model::PairFeatures>& feats,
                                     const std::vector<double>& thresholds) {
  auto p = predict_all(params, feats);
  return metrics::format_report(metrics::evaluate(p.preds, p.labels, thresholds));
}

struct PipelineResult {
  std::string report;
  fs::path dataset;
};

/// synth embeddings -> simulate -> assemble -> (train -> evaluate on the held-out split).
inline PipelineResult run_pipeline(const config::Config& cfg, std::size_t pairs, const fs::path& dir,
                                   std::size_t max_rounds, bool train, const std::vector<double>& thresholds,
                                   std::ostream& log) {
  if (pairs < 1) throw Error(ErrorCode::invalid_argument, "--pairs must be at least 1");
  fs::create_directories(dir);
  const auto all_themes = lexicon::load_lexicon(cfg.lexicon);
  const auto themes = lexicon::load_lexicon(cfg.lexicon, cfg.max_rating);
  const auto table = embeddings::synthetic_table(all_themes, derive_seed(cfg.seed, "embeddings"));
  embeddings::write_table(table, (dir / "embeddings.tsv").string());
  log << "embeddings: " << table.size() << " words\n";

  const auto rounds =
      simgen::simulate_for_assembly(themes, table, pairs, derive_seed(cfg.seed, "simulate"), max_rounds);
  simgen::write_rounds(rounds, (dir / "rounds.jsonl").string());
  log << "simulated: " << rounds.size() << " rounds\n";

  const auto sessions = simgen::assemble_sessions(rounds, pairs, derive_seed(cfg.seed, "assemble"));
  const auto log_dir = dir / "logs";
  fs::remove(log_dir / datastore::kSessionsFile);
  datastore::LogStore store(log_dir);
  std::vector<datastore::LabeledPair> dataset;
  for (const auto& s : sessions) {
    store.append(simgen::to_session_log(s));
    dataset.push_back(simgen::to_labeled_pair(s));
  }
  const auto dataset_path = dir / "dataset.jsonl";
  datastore::write_dataset(dataset, dataset_path.string());
  log << "assembled: " << sessions.size() << " sessions\n";

  PipelineResult result{{}, dataset_path};
  if (!train) return result;

  const auto loaded = datastore::read_dataset(dataset_path.string());
  const auto feats = model::build_features(loaded, table);
  const auto trained = model::train(feats, train_config(cfg));
  model::save_params(trained.params, (dir / "params.txt").string());
  write_text((dir / "train_report.tsv").string(), train_report_tsv(trained.report));
  log << "trained: " << trained.report.epochs.size() << " epochs, best " << trained.report.best_epoch << "\n";

  result.report = evaluation_report(trained.params, select(feats, trained.report.val_indices), thresholds);
  write_text((dir / "report.txt").string(), result.report);
  return result;
}

}  // namespace detail

/// Runs one command line. Returns 0 on success, 1 on a runtime failure and
/// 2 on a usage error.
inline int run(const std::vector<std::string>& args, Streams io = {std::cout, std::cerr}) {
  CLI::App app{"Tacit word-association game: server, simulation and compatibility model", "tug"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "JSON config file (keys as in TUG_* variables, lowercased)");

  // Flags bound to config keys; applied after file and environment.
  std::vector<std::pair<CLI::Option*, std::string>> bound;
  std::map<std::string, std::string> flag_values;
  auto bind = [&](CLI::App* sc, const std::string& flag, const std::string& key, const std::string& desc) {
    bound.emplace_back(sc->add_option(flag, flag_values[key + "@" + sc->get_name()], desc), key);
  };

  // serve
  auto* serve = app.add_subcommand("serve", "Run the game server (WebSocket + HTTP)");
  bind(serve, "--port", "port", "TCP port (0 picks a free one)");
  bind(serve, "--address", "address", "Bind address");
  bind(serve, "--lexicon", "lexicon", "Lexicon TSV");
  bind(serve, "--embeddings", "embeddings", "Embedding table");
  bind(serve, "--log-dir", "log_dir", "Directory for append-only logs");
  bind(serve, "--definitions", "definitions", "Definitions TSV behind /define");
  bind(serve, "--max-rating", "max_rating", "Highest difficulty kept");
  std::optional<std::uint64_t> serve_seed;
  serve->add_option("--seed", serve_seed, "Seed for session and token generation");
  double run_for = 0.0;
  serve->add_option("--run-for", run_for, "Drain and exit after this many seconds (0 = until signaled)");

  // lexicon
  auto* lex = app.add_subcommand("lexicon", "Lexicon utilities");
  lex->require_subcommand(1);
  auto* lex_validate = lex->add_subcommand("validate", "Parse a lexicon and report per-theme counts");
  std::string lex_path;
  lex_validate->add_option("path", lex_path, "Lexicon TSV")->required();
  bind(lex_validate, "--max", "max_rating", "Highest difficulty counted as playable");
  auto* lex_filter = lex->add_subcommand("filter", "Keep entries rated at most --max");
  std::string filter_in, filter_out;
  bind(lex_filter, "--max", "max_rating", "Highest difficulty kept");
  lex_filter->add_option("in", filter_in, "Input TSV")->required();
  lex_filter->add_option("out", filter_out, "Output TSV")->required();

  // embeddings
  auto* emb = app.add_subcommand("embeddings", "Embedding table utilities");
  emb->require_subcommand(1);
  auto* synth = emb->add_subcommand("synth", "Generate the synthetic embedding table");
  bind(synth, "--lexicon", "lexicon", "Lexicon TSV");
  bind(synth, "--seed", "seed", "Seed");
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output table")->required();
  std::size_t synth_dim = embeddings::kDefaultDim;
  synth->add_option("--dim", synth_dim, "Vector dimension");
  auto* fetch = emb->add_subcommand("fetch", "Embed every lexicon word through a remote provider");
  bind(fetch, "--lexicon", "lexicon", "Lexicon TSV");
  bind(fetch, "--endpoint", "embedding_endpoint", "Provider URL");
  std::string fetch_out;
  fetch->add_option("--out", fetch_out, "Output table")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate scored rounds");
  bind(sim, "--lexicon", "lexicon", "Lexicon TSV");
  bind(sim, "--embeddings", "embeddings", "Embedding table");
  bind(sim, "--scorer", "scorer", "oracle or llm");
  bind(sim, "--seed", "seed", "Seed");
  std::size_t sim_rounds = 0;
  sim->add_option("--rounds", sim_rounds, "Number of rounds (upper bound with --for-pairs)")->required();
  std::size_t sim_for_pairs = 0;
  sim->add_option("--for-pairs", sim_for_pairs, "Keep simulating until every score bucket can feed this many pairs");
  std::string sim_out;
  sim->add_option("--out", sim_out, "Output rounds file")->required();

  // assemble
  auto* asmb = app.add_subcommand("assemble", "Assemble scored rounds into labeled sessions");
  std::string asm_rounds, asm_out, asm_logs;
  std::size_t asm_pairs = 400;
  asmb->add_option("--rounds", asm_rounds, "Rounds file from simulate")->required();
  asmb->add_option("--pairs", asm_pairs, "Number of sessions");
  asmb->add_option("--out", asm_out, "Dataset file")->required();
  asmb->add_option("--log-dir", asm_logs, "Also append session logs here");
  bind(asmb, "--seed", "seed", "Seed");

  // export
  auto* exp = app.add_subcommand("export", "Export completed sessions as a labeled dataset");
  std::string exp_policy, exp_out;
  bind(exp, "--logs", "log_dir", "Log directory");
  exp->add_option("--policy", exp_policy, "urcs, llm or oracle")->required();
  exp->add_option("--out", exp_out, "Dataset file")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train the Siamese compatibility model");
  std::string trn_data, trn_report;
  trn->add_option("--data", trn_data, "Dataset file")->required();
  bind(trn, "--embeddings", "embeddings", "Embedding table");
  bind(trn, "--seed", "seed", "Seed");
  bind(trn, "--out", "params", "Output parameter file");
  bind(trn, "--alpha", "alpha", "Auxiliary loss weight");
  bind(trn, "--learning-rate", "learning_rate", "Adam learning rate");
  bind(trn, "--batch-size", "batch_size", "Mini-batch size");
  bind(trn, "--patience", "patience", "Early-stopping patience (epochs)");
  bind(trn, "--max-epochs", "max_epochs", "Epoch cap");
  trn->add_option("--report", trn_report, "Per-epoch loss table (TSV)");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Evaluate a trained model on a dataset");
  std::string evl_params, evl_data, evl_out, evl_split = "all";
  std::string evl_thresholds = "0.75,0.80";
  evl->add_option("--params", evl_params, "Parameter file")->required();
  evl->add_option("--data", evl_data, "Dataset file")->required();
  bind(evl, "--embeddings", "embeddings", "Embedding table");
  evl->add_option("--thresholds", evl_thresholds, "Comma-separated thresholds");
  evl->add_option("--out", evl_out, "Write the report here as well");
  evl->add_option("--split", evl_split, "all, or val for the held-out split train used")
      ->check(CLI::IsMember({"all", "val"}));
  bind(evl, "--seed", "seed", "Seed train used (for --split val)");

  // predict
  auto* prd = app.add_subcommand("predict", "Predict compatibility for pairs");
  std::string prd_params, prd_pair, prd_out;
  prd->add_option("--params", prd_params, "Parameter file")->required();
  prd->add_option("--pair", prd_pair, "Dataset-format file with one or more pairs")->required();
  bind(prd, "--embeddings", "embeddings", "Embedding table");
  prd->add_option("--out", prd_out, "Write predictions here as well");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Synthetic end-to-end run from one seed");
  bind(pipe, "--seed", "seed", "Seed");
  bind(pipe, "--lexicon", "lexicon", "Lexicon TSV");
  bind(pipe, "--max-epochs", "max_epochs", "Epoch cap");
  std::size_t pipe_pairs = 400;
  pipe->add_option("--pairs", pipe_pairs, "Number of sessions");
  std::string pipe_dir = "pipeline_out";
  pipe->add_option("--out-dir", pipe_dir, "Output directory");
  std::size_t pipe_max_rounds = 200000;
  pipe->add_option("--max-rounds", pipe_max_rounds, "Simulation budget");
  bool pipe_no_train = false;
  pipe->add_flag("--no-train", pipe_no_train, "Stop after assembling the dataset");
  std::string pipe_thresholds = "0.75,0.80";
  pipe->add_option("--thresholds", pipe_thresholds, "Comma-separated thresholds");

  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      ++i;
      continue;
    }
    if (args[i].empty() || args[i][0] == '-') continue;
    if (!app.get_subcommand_no_throw(args[i])) {
      io.err << "error: unknown subcommand '" << args[i] << "'\n\n" << app.help();
      return 2;
    }
    break;
  }

  std::vector<std::string> argv_store{"tug"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    auto cfg = config::load(config_file);
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) config::set(cfg, key, opt->as<std::string>());
    }

    if (*serve) {
      auto themes = lexicon::load_lexicon(cfg.lexicon, cfg.max_rating);
      auto table = embeddings::read_table(cfg.embeddings);
      for (const auto& t : themes) embeddings::require_words(table, t.words());
      auto content = std::make_shared<session::GameContent>(session::GameContent{std::move(themes), std::move(table)});
      datastore::LogStore store(cfg.log_dir);
      lobby::LobbyConfig lc;
      lc.selection_timeout_ms = std::int64_t{cfg.selection_timeout_s} * 1000;
      lc.share_timeout_ms = std::int64_t{cfg.share_timeout_s} * 1000;
      lc.queue_eviction_ms = std::int64_t{cfg.queue_eviction_s} * 1000;
      lc.seed = serve_seed;
      lobby::Lobby lob(content, lc, &store);
      std::optional<dictionary::TsvDefinitions> defs;
      if (fs::exists(cfg.definitions)) defs.emplace(cfg.definitions);
      server::ServerConfig sc;
      sc.address = cfg.address;
      sc.port = static_cast<unsigned short>(cfg.port);
      server::Server srv(lob, defs ? &*defs : nullptr, sc);
      const auto port = srv.listen();
      io.out << "listening on " << cfg.address << ":" << port << std::endl;
      const std::chrono::milliseconds drain(std::int64_t{cfg.drain_s} * 1000);
      boost::asio::signal_set signals(srv.io(), SIGINT, SIGTERM);
      signals.async_wait([&](boost::system::error_code ec, int) {
        if (!ec) srv.drain_and_stop(drain);
      });
      std::optional<boost::asio::steady_timer> stopper;
      if (run_for > 0) {
        stopper.emplace(srv.io(), std::chrono::milliseconds(static_cast<long>(run_for * 1000)));
        stopper->async_wait([&](boost::system::error_code ec) {
          if (!ec) srv.drain_and_stop(drain);
        });
      }
      srv.run();
      io.out << "stopped; " << lob.sessions_created() << " sessions served" << std::endl;
      return 0;
    }

    if (*lex_validate) {
      const auto entries = lexicon::read_entries(lex_path);
      const auto themes = lexicon::build_themes(entries);
      const auto playable = lexicon::build_themes(lexicon::filter_by_difficulty(entries, cfg.max_rating));
      io.out << "themes " << themes.size() << ", entries " << entries.size() << "\n";
      for (const auto& t : playable) {
        io.out << t.name << "\t" << t.subcategories.size() << " subcategories\t" << t.size() << " words rated <= "
               << cfg.max_rating << "\n";
      }
      for (const auto& w : lexicon::lexicon_warnings(playable)) io.err << "warning: " << w << "\n";
      return 0;
    }

    if (*lex_filter) {
      const auto kept = lexicon::filter_by_difficulty(lexicon::read_entries(filter_in), cfg.max_rating);
      std::ofstream out(filter_out, std::ios::binary);
      if (!out) throw Error(ErrorCode::io_error, "cannot open " + filter_out);
      lexicon::write_entries(kept, out);
      io.out << "kept " << kept.size() << " entries\n";
      return 0;
    }

    if (*synth) {
      const auto themes = lexicon::load_lexicon(cfg.lexicon);
      embeddings::SyntheticTableOptions opts;
      opts.dim = synth_dim;
      const auto table = embeddings::synthetic_table(themes, cfg.seed, opts);
      embeddings::write_table(table, synth_out);
      io.out << "wrote " << table.size() << " vectors of dim " << table.dim() << " to " << synth_out << "\n";
      return 0;
    }

    if (*fetch) {
      if (cfg.embedding_endpoint.empty()) throw Error(ErrorCode::invalid_argument, "--endpoint (or TUG_EMBEDDING_ENDPOINT) is required");
      std::vector<std::string> words;
      std::set<std::string> seen;
      for (const auto& t : lexicon::load_lexicon(cfg.lexicon)) {
        if (seen.insert(t.name).second) words.push_back(t.name);
        for (const auto& w : t.words()) {
          if (seen.insert(w).second) words.push_back(w);
        }
      }
      embeddings::RemoteConfig rc;
      rc.endpoint = cfg.embedding_endpoint;
      embeddings::RemoteEmbedder remote(rc);
      const auto table = remote.embed_words(words);
      embeddings::write_table(table, fetch_out);
      io.out << "wrote " << table.size() << " vectors of dim " << table.dim() << " to " << fetch_out << "\n";
      return 0;
    }

    if (*sim) {
      const auto themes = lexicon::load_lexicon(cfg.lexicon, cfg.max_rating);
      const auto table = embeddings::read_table(cfg.embeddings);
      auto rounds = sim_for_pairs > 0 ? simgen::simulate_for_assembly(themes, table, sim_for_pairs, cfg.seed, sim_rounds)
                                      : simgen::simulate_rounds(themes, table, sim_rounds, cfg.seed);
      if (simgen::parse_scorer(cfg.scorer) == simgen::Scorer::llm) {
        if (cfg.llm_endpoint.empty()) throw Error(ErrorCode::invalid_argument, "the llm scorer needs TUG_LLM_ENDPOINT");
        llm::HttpTransport transport({cfg.llm_endpoint, cfg.llm_model, cfg.llm_api_key});
        const auto before = rounds.size();
        rounds = simgen::rescore_with_llm(std::move(rounds), transport, cfg.llm_concurrency);
        if (rounds.size() < before) io.err << "warning: dropped " << before - rounds.size() << " unscored rounds\n";
      }
      simgen::write_rounds(rounds, sim_out);
      io.out << "wrote " << rounds.size() << " rounds to " << sim_out << "\n";
      return 0;
    }

    if (*asmb) {
      const auto rounds = simgen::read_rounds(asm_rounds);
      const auto sessions = simgen::assemble_sessions(rounds, asm_pairs, cfg.seed);
      std::vector<datastore::LabeledPair> dataset;
      std::optional<datastore::LogStore> store;
      if (!asm_logs.empty()) store.emplace(asm_logs);
      for (const auto& s : sessions) {
        dataset.push_back(simgen::to_labeled_pair(s));
        if (store) store->append(simgen::to_session_log(s));
      }
      datastore::write_dataset(dataset, asm_out);
      io.out << "wrote " << dataset.size() << " pairs to " << asm_out << "\n";
      return 0;
    }

    if (*exp) {
      datastore::LogStore store(cfg.log_dir);
      std::vector<std::string> warnings;
      const auto pairs = datastore::export_training_set(store, datastore::parse_label_source(exp_policy), &warnings);
      for (const auto& w : warnings) io.err << "warning: " << w << "\n";
      datastore::write_dataset(pairs, exp_out);
      io.out << "exported " << pairs.size() << " pairs to " << exp_out << "\n";
      return 0;
    }

    if (*trn) {
      const auto table = embeddings::read_table(cfg.embeddings);
      const auto feats = model::build_features(datastore::read_dataset(trn_data), table);
      const auto result = model::train(feats, detail::train_config(cfg));
      model::save_params(result.params, cfg.params);
      if (!trn_report.empty()) detail::write_text(trn_report, detail::train_report_tsv(result.report));
      io.out << "trained " << result.report.epochs.size() << " epochs; best epoch " << result.report.best_epoch
             << " val loss " << embeddings::format_double(result.report.best_val_loss) << "; wrote " << cfg.params
             << "\n";
      return 0;
    }

    if (*evl) {
      const auto table = embeddings::read_table(cfg.embeddings);
      const auto params = model::load_params(evl_params);
      auto feats = model::build_features(datastore::read_dataset(evl_data), table);
      if (evl_split == "val") feats = detail::select(feats, model::split_indices(feats.size(), 0.2, cfg.seed).val);
      const auto report = detail::evaluation_report(params, feats, detail::parse_thresholds(evl_thresholds));
      io.out << report;
      if (!evl_out.empty()) detail::write_text(evl_out, report);
      return 0;
    }

    if (*prd) {
      const auto table = embeddings::read_table(cfg.embeddings);
      const auto params = model::load_params(prd_params);
      std::ostringstream body;
      body << "pair_id\ty_hat\ty1_hat\ty2_hat\n";
      for (const auto& pair : datastore::read_dataset(prd_pair)) {
        auto traces = model::traces_for(pair, table);
        const auto p = model::predict(params, model::pool_player(traces[0]), model::pool_player(traces[1]));
        body << pair.pair_id << '\t' << embeddings::format_double(p.y_hat) << '\t'
             << embeddings::format_double(p.y1_hat) << '\t' << embeddings::format_double(p.y2_hat) << '\n';
      }
      io.out << body.str();
      if (!prd_out.empty()) detail::write_text(prd_out, body.str());
      return 0;
    }

    if (*pipe) {
      const auto result = detail::run_pipeline(cfg, pipe_pairs, pipe_dir, pipe_max_rounds, !pipe_no_train,
                                               detail::parse_thresholds(pipe_thresholds), io.err);
      io.out << result.report;
      return 0;
    }
  } catch (const Error& e) {
    io.err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

inline int run(int argc, const char* const* argv, Streams io = {std::cout, std::cerr}) {
  return run(std::vector<std::string>(argv + 1, argv + argc), io);
}

}  // namespace tug::cli
