// guidec: decode, sweep, verify and train from the command line.
// Exit status: 0 ok, 1 verification failure, 2 input error.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "guidec/harness.hpp"
#include "guidec/models.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kInputError = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw guidec::Error(guidec::ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw guidec::Error(guidec::ErrorCode::InvalidArgument, "failed writing " + path);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw guidec::Error(guidec::ErrorCode::InvalidArgument, "bad value '" + item + "' in --values");
    }
    values.push_back(v);
  }
  if (values.empty()) throw guidec::Error(guidec::ErrorCode::InvalidArgument, "--values is empty");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided decoding policies, exact valuation and certification"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, param, values, suite, corpus_path, eos = "</s>";
  std::vector<std::string> vocab;
  std::uint64_t seed = 0;
  guidec::VerifyConfig vcfg;
  int order = 1;
  double alpha = 1.0;

  auto* decode = app.add_subcommand("decode", "Decode one episode and write its trace as JSON");
  decode->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  decode->add_option("--seed", seed, "Episode seed")->required();
  decode->add_option("--out", out_path, "Trace JSON path ('-' for stdout)")->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep one policy hyperparameter and write metrics CSV");
  sweep->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "lambda, temperature (T) or sigma")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out_path, "CSV path ('-' for stdout)")->required();

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", suite, "theorems, identities or valuation")->required();
  verify->add_option("--trials", vcfg.trials, "Random instances per check")->check(CLI::PositiveNumber);
  verify->add_option("--vocab-max", vcfg.vocab_max, "Largest vocabulary drawn")->check(CLI::Range(2, 64));
  verify->add_option("--tol", vcfg.tol, "L-infinity tolerance vs the oracle")->check(CLI::PositiveNumber);
  verify->add_option("--seed", vcfg.seed, "Instance seed");
  verify->add_option("--out", out_path, "Report JSON path ('-' for stdout)")->required();

  auto* train = app.add_subcommand("train", "Fit an add-alpha tabular model to a text corpus");
  train->add_option("--corpus", corpus_path, "Lines of '<evidence>\\t<tokens>'")->required();
  train->add_option("--order", order, "Context length (0-3)")->required();
  train->add_option("--alpha", alpha, "Additive smoothing")->required();
  train->add_option("--out", out_path, "Model JSON path")->required();
  train->add_option("--eos", eos, "End-of-sequence symbol");
  train->add_option("--vocab", vocab, "Explicit vocabulary order")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*decode) {
      const guidec::Scenario scenario = guidec::load_scenario(scenario_path);
      const auto trace = guidec::run_episode(scenario, seed);
      write_text(out_path, guidec::trace_to_json(trace, scenario.model->vocab()).dump(2) + "\n");
    } else if (*sweep) {
      const guidec::Scenario scenario = guidec::load_scenario(scenario_path);
      const auto rows = guidec::sweep(scenario, param, parse_values(values));
      write_text(out_path, guidec::metrics_csv(rows));
    } else if (*verify) {
      const auto report = guidec::verify(guidec::parse_verify_suite(suite), vcfg);
      write_text(out_path, report.to_json().dump(2) + "\n");
      for (const auto& c : report.checks) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << " worst=" << c.worst
                  << " tol=" << c.tolerance << " (" << c.detail << ")\n";
      }
      return report.passed() ? kOk : kVerifyFailed;
    } else if (*train) {
      const auto corpus = guidec::read_text_corpus(std::filesystem::path(corpus_path), eos, vocab);
      guidec::save_model(guidec::train_tabular(corpus.vocab, corpus.entries, order, alpha), out_path);
    }
  } catch (const guidec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    // Internal invariant breaks are not the caller's fault.
    return e.code() == guidec::ErrorCode::InvariantViolation ? kVerifyFailed : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
