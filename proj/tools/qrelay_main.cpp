/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

// qrelay: run relay network scenarios and inspect their reports.

#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qrelay/error.hpp"
#include "qrelay/scenario.hpp"

namespace fs = std::filesystem;
using namespace qrelay;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) fail(ErrorCode::Io, "failed reading " + p.string());
  return ss.str();
}

int report_error(const Error& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    std::cerr << "qrelay: invalid scenario\n";
    for (const auto& x : v->violations()) std::cerr << "  " << (x.location.empty() ? "/" : x.location) << ": " << x.message << "\n";
    return exit_code::kValidation;
  }
  std::cerr << "qrelay: " << e.what() << "\n";
  switch (e.code()) {
    case ErrorCode::Io: return exit_code::kIo;
    case ErrorCode::Syntax:
    case ErrorCode::Validation: return exit_code::kValidation;
    default: return exit_code::kProtocol;
  }
}

int run_one(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  try {
    ScenarioConfig config = parse_config(read_file(config_path));
    if (seed) {
      config.seed = *seed;
      config.network.seed = *seed;
    }
    const ScenarioOutcome outcome = run_scenario(config);
    write_outputs(out_dir, outcome);
    std::cout << report_summary(outcome.report);
    return outcome.exit_code;
  } catch (const Error& e) {
    return report_error(e);
  }
}

// Each scenario runs in its own process and writes to <out>/<config stem>.
int run_batch(const std::vector<fs::path>& configs, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  std::cout.flush();
  std::vector<pid_t> children;
  for (const auto& c : configs) {
    const pid_t pid = fork();
    if (pid < 0) {
      std::cerr << "qrelay: cannot start a process for " << c << "\n";
      children.push_back(-1);
      continue;
    }
    if (pid == 0) {
      std::ostringstream sink;
      auto* old = std::cout.rdbuf(sink.rdbuf());
      const int code = run_one(c, out_dir / c.stem(), seed);
      std::cout.rdbuf(old);
      std::cout.flush();
      _exit(code);
    }
    children.push_back(pid);
  }
  int result = exit_code::kOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    int code = exit_code::kProtocol;
    if (children[i] > 0) {
      int status = 0;
      waitpid(children[i], &status, 0);
      code = WIFEXITED(status) ? WEXITSTATUS(status) : exit_code::kProtocol;
    }
    std::cout << configs[i].string() << ": exit " << code << "\n";
    if (result == exit_code::kOk) result = code;
  }
  return result;
}

int show_report(const fs::path& path) {
  try {
    std::cout << report_summary(parse_report(read_file(path)));
    return exit_code::kOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int replay(const fs::path& path) {
  try {
    const ReplayReport r = replay_transcript(read_file(path));
    std::cout << "records " << r.records << ", tag checks " << r.tag_checks << ", sift checks " << r.sift_checks
              << ", accounting checks " << r.accounting_checks << "\n";
    for (const auto& i : r.issues) std::cout << "record " << i.record << " " << i.type << ": " << i.message << "\n";
    std::cout << (r.ok() ? "ok" : "CORRUPT") << "\n";
    return r.ok() ? exit_code::kOk : exit_code::kProtocol;
  } catch (const Error& e) {
    return report_error(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate key distribution over trusted relay networks"};
  app.require_subcommand(1);

  std::vector<fs::path> configs;
  fs::path out_dir = "qrelay-out";
  std::optional<std::uint64_t> seed;
  bool batch = false;
  auto* run = app.add_subcommand("run", "Run scenarios and write report.json, summary.txt and transcript.jsonl");
  run->add_option("config", configs, "Scenario file(s)")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_flag("--batch", batch, "Run several scenarios in parallel, one subdirectory each");

  fs::path report_path;
  auto* report = app.add_subcommand("report", "Print the summary table of a report file");
  report->add_option("report", report_path, "report.json")->required();

  fs::path transcript_path;
  auto* verify = app.add_subcommand("replay", "Re-verify a transcript");
  verify->add_option("transcript", transcript_path, "transcript.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kValidation;
  }

  if (*run) {
    if (batch) return run_batch(configs, out_dir, seed);
    if (configs.size() != 1) {
      std::cerr << "qrelay: several scenarios need --batch\n";
      return exit_code::kValidation;
    }
    return run_one(configs[0], out_dir, seed);
  }
  if (*report) return show_report(report_path);
  return replay(transcript_path);
}
