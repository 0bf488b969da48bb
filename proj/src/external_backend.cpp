#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "emomt/backends.hpp"
#include "emomt/error.hpp"

namespace emomt {

namespace {

struct CommandResult {
  int exit_code = 0;
  std::string stdout_text;
};

CommandResult run_command(const std::string& command) {
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) throw BackendError("cannot start command: " + command);
  CommandResult res;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) res.stdout_text.append(buf.data(), n);
  const int status = ::pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string tail_of(const std::filesystem::path& log, std::size_t max_chars = 2000) {
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  if (s.size() > max_chars) s = "..." + s.substr(s.size() - max_chars);
  return s;
}

// The whole stdout, or failing that its last line that parses as an object.
json parse_command_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (j.is_object()) return j;
  } catch (const json::parse_error&) {
  }
  std::istringstream in(text);
  std::string line;
  json found;
  while (std::getline(in, line)) {
    try {
      auto j = json::parse(line);
      if (j.is_object()) found = std::move(j);
    } catch (const json::parse_error&) {
    }
  }
  if (found.is_null()) throw BackendError("command printed no JSON object on stdout");
  return found;
}

std::string fnv_hex(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string required(const json& config, const char* key) {
  auto it = config.find(key);
  if (it == config.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw UsageError(std::string("external backend config needs a non-empty '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string expand_command(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += shell_quote(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

ExternalBackend::ExternalBackend(json config) : config_(std::move(config)) {
  base_model_ = required(config_, "base_model");
  train_command_ = required(config_, "train_command");
  generate_command_ = required(config_, "generate_command");
}

std::string ExternalBackend::initial_checksum(std::uint64_t) const { return fnv_hex(base_model_); }

TrainingRun ExternalBackend::fit(std::span<const PromptExample> train_set, std::span<const PromptExample> dev_set,
                                 const TrainingConfig& config, const std::filesystem::path& workdir,
                                 const EpochCallback& on_epoch) {
  namespace fs = std::filesystem;
  fs::create_directories(workdir);
  const auto train_path = fs::absolute(workdir / "train.jsonl");
  const auto dev_path = fs::absolute(workdir / "dev.jsonl");
  const auto log_path = fs::absolute(workdir / "train.log");
  save_prompt_set({train_set.begin(), train_set.end()}, train_path);
  save_prompt_set({dev_set.begin(), dev_set.end()}, dev_path);

  const std::string command = expand_command(train_command_, {{"train", train_path.string()},
                                                              {"dev", dev_path.string()},
                                                              {"out_dir", fs::absolute(workdir).string()},
                                                              {"max_epochs", std::to_string(config.max_epochs)},
                                                              {"seed", std::to_string(config.seed)},
                                                              {"metric", std::string(to_string(config.early_stopping_metric))},
                                                              {"base_model", base_model_}}) +
                              " 2> " + shell_quote(log_path.string());
  const auto res = run_command(command);
  if (res.exit_code != 0) {
    throw BackendError("external training command exited with " + std::to_string(res.exit_code) + ":\n" + tail_of(log_path));
  }

  json out;
  try {
    out = parse_command_json(res.stdout_text);
  } catch (const BackendError& e) {
    throw BackendError(std::string("external training: ") + e.what() + "\n" + tail_of(log_path));
  }

  TrainingRun run;
  try {
    run.fallback_checkpoint = out.at("checkpoint_ref").get<std::string>();
    for (const auto& e : out.at("epochs")) run.epochs.push_back(EpochRecord::from_json(e));
  } catch (const json::exception& e) {
    throw BackendError(std::string("external training output is missing fields: ") + e.what());
  }
  run.initial_checksum = out.value("initial_checksum", initial_checksum(config.seed));
  for (const auto& rec : run.epochs) {
    if (on_epoch) on_epoch(rec);
  }
  return run;
}

std::string ExternalBackend::initial_checkpoint(const TrainingConfig&, const std::filesystem::path&) {
  return base_model_;
}

std::vector<std::string> ExternalBackend::generate(const std::string& checkpoint_ref,
                                                   std::span<const std::string> prompts) {
  namespace fs = std::filesystem;
  const fs::path dir = config_.contains("scratch_dir") ? fs::path(config_["scratch_dir"].get<std::string>())
                                                      : fs::temp_directory_path() / ("emomt-gen-" + fnv_hex(checkpoint_ref));
  fs::create_directories(dir);
  const auto prompts_path = fs::absolute(dir / "prompts.jsonl");
  const auto output_path = fs::absolute(dir / "generations.jsonl");
  const auto log_path = fs::absolute(dir / "generate.log");
  std::vector<json> records;
  records.reserve(prompts.size());
  for (const auto& p : prompts) records.push_back({{"prompt", p}});
  write_jsonl(prompts_path, records);
  fs::remove(output_path);

  const std::string command = expand_command(generate_command_, {{"checkpoint", checkpoint_ref},
                                                                 {"prompts", prompts_path.string()},
                                                                 {"output", output_path.string()}}) +
                              " 2> " + shell_quote(log_path.string());
  const auto res = run_command(command);
  if (res.exit_code != 0) {
    throw BackendError("external generate command exited with " + std::to_string(res.exit_code) + ":\n" + tail_of(log_path));
  }
  std::vector<std::string> out;
  for_each_jsonl(output_path, [&](const json& r, std::size_t line) {
    auto it = r.find("text");
    if (it == r.end() || !it->is_string()) throw RecordError(output_path.string(), line, "missing 'text'");
    out.push_back(it->get<std::string>());
  });
  return out;
}

}  // namespace emomt
