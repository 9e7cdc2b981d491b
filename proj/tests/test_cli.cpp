// End-to-end driver checks: spawns the real CLI binary (argv[1]) against tiny
// configs in a scratch directory and inspects exit codes and artifacts.
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                          \
    }                                                                      \
  } while (0)

std::string cli;
fs::path scratch;

int run(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
  fs::path out_file = scratch / "stdout.txt";
  fs::path err_file = scratch / "stderr.txt";
  std::string cmd = "\"" + cli + "\" " + args + " >" + out_file.string() + " 2>" +
                    err_file.string();
  int rc = std::system(cmd.c_str());
  auto slurp_into = [](const fs::path& p, std::string* dst) {
    if (!dst) return;
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    *dst = ss.str();
  };
  slurp_into(out_file, out);
  slurp_into(err_file, err);
  if (!WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::string drop_last_field(const std::string& line) {
  size_t comma = line.rfind(',');
  return comma == std::string::npos ? line : line.substr(0, comma);
}

void write_tiny_config(const fs::path& path) {
  json j;
  j["dataset"] = {{"train_samples", 16}, {"test_samples", 8}};
  j["network"] = {{"hidden", json::array({4})}, {"timesteps", 2}};
  j["optimizer"] = {{"epochs", 1}};
  j["fisher"] = {{"subset", 4}, {"epoch_stride", 1}};
  j["seeds"] = json::array({1});
  std::ofstream out(path);
  out << j.dump(2);
}

void check_usage_errors() {
  std::string err;
  CHECK(run("") != 0);  // a subcommand is required
  CHECK(run("frobnicate") != 0);
  CHECK(run("train --no-such-flag") != 0);

  CHECK(run("train --config " + (scratch / "missing.json").string(), nullptr, &err) == 1);
  CHECK(err.find("missing.json") != std::string::npos);

  fs::path cfg = scratch / "tiny.json";
  CHECK(run("train --config " + cfg.string() + " --override bogus.key=1", nullptr, &err) ==
        1);
  CHECK(err.find("unknown key") != std::string::npos);

  // config errors are usage errors (1), runtime failures are 2
  CHECK(run("train --config " + cfg.string() + " --override network.timesteps=0 --out " +
            (scratch / "zt").string(),
            nullptr, &err) == 2);
}

void check_train_and_determinism() {
  fs::path cfg = scratch / "tiny.json";
  fs::path d1 = scratch / "run1";
  fs::path d2 = scratch / "run2";

  CHECK(run("train --config " + cfg.string() + " --out " + d1.string()) == 0);
  CHECK(run("train --config " + cfg.string() + " --out " + d2.string()) == 0);

  for (const char* name : {"train_seed1.csv", "ic_seed1.csv", "model_seed1.ckpt",
                           "manifest.json"})
    CHECK(fs::exists(d1 / name));

  json manifest = json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("seeds") == json::array({1}));
  CHECK(manifest.at("summary").contains("final_test_accuracy"));
  for (const auto& out : manifest.at("outputs")) CHECK(fs::exists(out.get<std::string>()));

  auto t1 = lines_of(slurp(d1 / "train_seed1.csv"));
  auto t2 = lines_of(slurp(d2 / "train_seed1.csv"));
  CHECK(t1.size() == 2);  // header + one epoch
  CHECK(t1.size() == t2.size());
  CHECK(t1[0] == "seed,epoch,train_loss,test_accuracy,seconds");
  for (size_t i = 0; i < t1.size() && i < t2.size(); ++i)
    CHECK(drop_last_field(t1[i]) == drop_last_field(t2[i]));  // identical modulo timing

  // fisher recordings and checkpoints carry no timing, so they match bitwise
  CHECK(slurp(d1 / "ic_seed1.csv") == slurp(d2 / "ic_seed1.csv"));
  CHECK(slurp(d1 / "model_seed1.ckpt") == slurp(d2 / "model_seed1.ckpt"));
  auto ic = lines_of(slurp(d1 / "ic_seed1.csv"));
  CHECK(ic.size() == 5);  // header + (epoch 0, epoch 1) x (t=1, t=2)
  CHECK(ic[0] == "epoch,t,I_t,IC");

  // --seed replaces the config's seed list
  fs::path d3 = scratch / "run3";
  CHECK(run("train --config " + cfg.string() + " --seed 7 --out " + d3.string()) == 0);
  CHECK(fs::exists(d3 / "train_seed7.csv"));
  json m3 = json::parse(slurp(d3 / "manifest.json"));
  CHECK(m3.at("seeds") == json::array({7}));
}

void check_fisher() {
  fs::path cfg = scratch / "tiny.json";
  fs::path d = scratch / "fisher";
  CHECK(run("fisher --config " + cfg.string() + " --out " + d.string()) == 0);
  CHECK(fs::exists(d / "fisher_seed1.csv"));
  CHECK(fs::exists(d / "layers_seed1.csv"));
  auto rows = lines_of(slurp(d / "fisher_seed1.csv"));
  CHECK(rows.size() == 3);  // header + T=2
  CHECK(rows[0] == "t,I_t,IC");

  // profiling an existing checkpoint skips training
  fs::path ckpt = scratch / "run1" / "model_seed1.ckpt";
  fs::path d2 = scratch / "fisher_ckpt";
  CHECK(run("fisher --config " + cfg.string() + " --checkpoint " + ckpt.string() +
            " --out " + d2.string()) == 0);
  CHECK(slurp(d / "fisher_seed1.csv") == slurp(d2 / "fisher_seed1.csv"));
}

void check_dataset_tools() {
  fs::path cfg = scratch / "tiny.json";
  fs::path d = scratch / "data";
  CHECK(run("dataset gen --config " + cfg.string() + " --out " + d.string()) == 0);
  for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "test-images-idx3-ubyte", "test-labels-idx1-ubyte"})
    CHECK(fs::exists(d / name));

  std::string out;
  CHECK(run("dataset inspect --images " + (d / "train-images-idx3-ubyte").string() +
            " --labels " + (d / "train-labels-idx1-ubyte").string() + " --out " +
            (scratch / "inspect").string(),
            &out) == 0);
  CHECK(out.find("images: 16 of 16x16") != std::string::npos);
  CHECK(out.find("label 0: 8 samples") != std::string::npos);

  CHECK(run("dataset inspect --images nope.idx --labels " +
            (d / "train-labels-idx1-ubyte").string() + " --out " +
            (scratch / "inspect2").string()) == 2);
}

void check_remaining_commands() {
  fs::path cfg = scratch / "tiny.json";

  fs::path dr = scratch / "robust";
  CHECK(run("robust --config " + cfg.string() + " --out " + dr.string()) == 0);
  auto rows = lines_of(slurp(dr / "robust.csv"));
  CHECK(rows.size() == 6);  // header + none/gaussian/blur/fgsm/pgd
  CHECK(rows[0] == "model,dataset,corruption,params,clean_acc,corrupted_acc,drop");

  fs::path dd = scratch / "deficit";
  CHECK(run("deficit --config " + cfg.string() + " --override deficit.length=1 --out " +
            dd.string()) == 0);
  CHECK(lines_of(slurp(dd / "deficit_seed1.csv")).size() == 3);  // header + starts 1, 2

  fs::path dp = scratch / "prune";
  CHECK(run("prune --config " + cfg.string() +
            " --override pruning.cycles=1 --override pruning.retrain_epochs=1"
            " --override pruning.timestep_rule=tic --out " +
            dp.string()) == 0);
  CHECK(fs::exists(dp / "prune_seed1.csv"));
  CHECK(fs::exists(dp / "pruned_seed1.ckpt"));
  json pm = json::parse(slurp(dp / "manifest.json"));
  CHECK(pm.at("summary").at("seed1").contains("efficiency_percent"));
  CHECK(pm.at("summary").at("seed1").at("T_retrain").get<int>() >= 1);

  fs::path da = scratch / "ablate";
  CHECK(run("ablate --config " + cfg.string() +
            " --axis timestep --values 2 0 --out " + da.string()) == 0);
  CHECK(fs::exists(da / "ablate_timestep.csv"));
  CHECK(fs::exists(da / "ablate_timestep_2.csv"));
  json am = json::parse(slurp(da / "manifest.json"));
  CHECK(am.at("summary").at("failed_cells").size() == 1);
  CHECK(am.at("summary").at("failed_cells")[0].at("value") == "0");

  fs::path dc = scratch / "capacity";
  CHECK(run("capacity --config " + cfg.string() +
            " --small 3 --large 6 --timesteps 1 2 --out " + dc.string()) == 0);
  auto cap = lines_of(slurp(dc / "capacity.csv"));
  CHECK(cap.size() == 5);  // header + 2 nets x 2 timesteps
  json cm = json::parse(slurp(dc / "manifest.json"));
  CHECK(cm.at("summary").contains("small_saturation"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-snnkit-cli>\n");
    return 2;
  }
  cli = argv[1];
  scratch = fs::path("cli_scratch");
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  write_tiny_config(scratch / "tiny.json");

  check_usage_errors();
  check_train_and_determinism();
  check_fisher();
  check_dataset_tools();
  check_remaining_commands();

  if (failures == 0) {
    std::printf("test_cli: all checks passed\n");
    return 0;
  }
  std::fprintf(stderr, "test_cli: %d check(s) failed\n", failures);
  return 1;
}
