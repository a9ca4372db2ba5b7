#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "attriprior/checkpoint.hpp"
#include "attriprior/cli.hpp"
#include "attriprior/config.hpp"
#include "attriprior/error.hpp"

using namespace attriprior;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status = -1;
  std::string output;
};

// Runs the command-line tool with `args`, capturing stdout and stderr.
Run run_cli(const std::string& args, const fs::path& scratch) {
  const char* exe = std::getenv("ATTRIPRIOR_CLI");
  REQUIRE_MESSAGE(exe != nullptr, "ATTRIPRIOR_CLI is not set");
  const fs::path log = scratch / "cli.log";
  const std::string cmd = "ATTRIPRIOR_THREADS=1 \"" + std::string(exe) + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  Run r;
  const int raw = std::system(cmd.c_str());
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = read_file(log);
  return r;
}

std::string minimal_config(const fs::path& dir) {
  write_file(dir / "train.tsv", "0\thello there\n1\tyou idiot\n");
  write_file(dir / "dev.tsv", "0\thello\n");
  write_file(dir / "test.tsv", "1\tidiot\n");
  write_file(dir / "identity.txt", "gay\nlesbian\n");
  return "[data]\ntrain = train.tsv\ndev = dev.tsv\ntest = test.tsv\nidentity_terms = identity.txt\n";
}

config::ExperimentConfig parse(const std::string& text, const fs::path& dir) {
  std::istringstream in(text);
  return config::parse_config(in, dir, "exp.ini");
}

}  // namespace

TEST_CASE("config parsing") {
  TempDir tmp("attriprior_config_parse");
  const std::string base = minimal_config(tmp.path);
  const auto cfg = parse(base + "[model]\nembed_dim = 16\nfilter_widths = 2, 3\n[train]\nmode = tok_replace\nseeds = 3,4\n"
                                "[prior]\npreset = fairness\nlambda = 1000\n",
                         tmp.path);
  CHECK(cfg.model.embed_dim == 16);
  CHECK(cfg.model.filter_widths == std::vector<std::size_t>{2, 3});
  CHECK(cfg.mode == training::TrainMode::TokReplace);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.paths.train == tmp.path / "train.tsv");
  CHECK(cfg.data.max_seq_len == cfg.model.max_seq_len);
  const auto spec = cfg.target_spec();
  REQUIRE(spec.has_value());
  CHECK(spec->lambda == 1000.0);
  CHECK(spec->target == 0.0);
  CHECK(spec->terms.contains("lesbian"));
  CHECK_FALSE(parse(base, tmp.path).target_spec().has_value());
}

TEST_CASE("config errors carry the line") {
  TempDir tmp("attriprior_config_errors");
  const std::string base = minimal_config(tmp.path);
  CHECK_THROWS_WITH_AS(parse(base + "[model]\nembed_dim = -3\n", tmp.path), doctest::Contains("exp.ini:7"), ParseError);
  CHECK_THROWS_WITH_AS(parse(base + "[model]\nembed_dim = 1.5\n", tmp.path), doctest::Contains("got '1.5'"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse(base + "[model]\ncolour = red\n", tmp.path), doctest::Contains("unknown field"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse(base + "[optimizer]\n", tmp.path), doctest::Contains("exp.ini:6"), ParseError);
  CHECK_THROWS_AS(parse("epochs = 3\n", tmp.path), ParseError);
  CHECK_THROWS_WITH_AS(parse(base + "[train]\nmode = joint\n", tmp.path), doctest::Contains("requires a [prior]"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse("[data]\ntrain = missing.tsv\ndev = dev.tsv\ntest = test.tsv\n", tmp.path),
                       doctest::Contains("file not found"), ParseError);
  CHECK_THROWS_AS(parse(base + "[prior]\npreset = scarcity\n", tmp.path), ParseError);
  CHECK_THROWS_AS(parse(base + "[train]\nig_rule = left\n", tmp.path), ParseError);
}

TEST_CASE("written configs parse back to the same values") {
  TempDir tmp("attriprior_config_roundtrip");
  const auto cfg = parse(minimal_config(tmp.path) +
                             "[model]\ndropout = 0.3\n[train]\nmode = finetune\nlearning_rate = 0.0005\n"
                             "ig_rule = midpoint\n[prior]\npreset = fairness\ntarget = 0.1\ntarget_class = 1\n",
                         tmp.path);
  std::ostringstream first;
  config::write_config(first, cfg);
  const auto back = parse(first.str(), tmp.path);
  std::ostringstream second;
  config::write_config(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.model == cfg.model);
  CHECK(back.train.adam.learning_rate == 0.0005);
  CHECK(back.train.ig.rule == attribution::RiemannRule::Midpoint);
  CHECK(*back.prior.target == 0.1);
}

TEST_CASE("attribution rendering and run statistics") {
  CHECK(cli::render_attributions({"i", "am", "gay"}, Tensor::vector({0.01, -0.2, 0.3456})) ==
        "i[+0.010] am[-0.200] gay[+0.346]");
  CHECK_THROWS_AS(cli::render_attributions({"a", "b"}, Tensor::vector({0.1})), ShapeError);
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = cli::mean_variance(v);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == 1.25);
  CHECK(cli::mean_variance(std::vector<double>{}).mean == 0.0);
}

TEST_CASE("uncommitted outputs are removed") {
  TempDir tmp("attriprior_outputs");
  const fs::path nested = tmp.path / "a" / "b" / "file.txt";
  {
    cli::OutputSet out;
    out.write_text(nested, "x");
    CHECK(fs::exists(nested));
  }
  CHECK_FALSE(fs::exists(tmp.path / "a"));
  {
    cli::OutputSet out;
    out.write_text(nested, "y");
    out.commit();
  }
  CHECK(read_file(nested) == "y");
}

TEST_CASE("synth expands templates") {
  TempDir tmp("attriprior_cli_synth");
  const std::string slot(text::kIdentitySlot);
  write_file(tmp.path / "templates.tsv", "I am " + slot + "\tnon-toxic\nI hate all " + slot + "\ttoxic\n");
  write_file(tmp.path / "identity.txt", "gay\nstraight\nchristian\n");
  const auto r = run_cli("synth --templates " + (tmp.path / "templates.tsv").string() + " --identity " +
                         (tmp.path / "identity.txt").string() + " --out " + (tmp.path / "synth.tsv").string(),
                     tmp.path);
  CHECK(r.status == 0);
  const auto rows = text::load_dataset(tmp.path / "synth.tsv");
  CHECK(rows.size() == 6);
  CHECK(rows[0].text == "i am gay");
  CHECK(read_file(tmp.path / "synth.tsv.terms").substr(0, 4) == "gay\n");
}

TEST_CASE("bad invocations fail cleanly") {
  TempDir tmp("attriprior_cli_errors");
  CHECK(run_cli("", tmp.path).status != 0);
  CHECK(run_cli("train --config " + (tmp.path / "none.ini").string(), tmp.path).status != 0);
  write_file(tmp.path / "bad.ini", "[data]\ntrain = nowhere.tsv\n");
  const auto r = run_cli("train --config " + (tmp.path / "bad.ini").string(), tmp.path);
  CHECK(r.status == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("planted corpus, training, evaluation and attribution end to end") {
  TempDir tmp("attriprior_cli_e2e");
  const fs::path corpus = tmp.path / "corpus";
  REQUIRE(run_cli("planted --out " + corpus.string() + " --examples 300 --seed 3", tmp.path).status == 0);
  for (const char* f : {"train.tsv", "dev.tsv", "test.tsv", "identity.txt", "toxic.txt", "templates.tsv"}) {
    CHECK(fs::exists(corpus / f));
  }

  auto cfg = config::load_config(corpus / "experiment.ini");
  cfg.model.embed_dim = 8;
  cfg.model.filters_per_width = 4;
  cfg.train.epochs = 1;
  cfg.train.ig.steps = 3;
  cfg.seeds = {1};
  std::ostringstream ini;
  config::write_config(ini, cfg);
  write_file(corpus / "small.ini", ini.str());

  const fs::path out_a = tmp.path / "run-a", out_b = tmp.path / "run-b";
  const auto train_a = run_cli("train --config " + (corpus / "small.ini").string() + " --out " + out_a.string(), tmp.path);
  REQUIRE_MESSAGE(train_a.status == 0, train_a.output);
  REQUIRE(run_cli("train --config " + (corpus / "small.ini").string() + " --out " + out_b.string(), tmp.path).status ==
          0);
  const fs::path ckpt = out_a / "seed-1" / "model.ckpt";
  REQUIRE(fs::exists(ckpt));
  CHECK(model::load_checkpoint(ckpt).params == model::load_checkpoint(out_b / "seed-1" / "model.ckpt").params);
  const std::string summary = read_file(out_a / "summary.json");
  CHECK(summary.find("\"synthetic_fped\"") != std::string::npos);
  CHECK(summary.find("\"mode\": \"joint\"") != std::string::npos);
  CHECK(read_file(out_a / "seed-1" / "history.jsonl").find("\"epoch\":1") != std::string::npos);

  const auto eval = run_cli("eval --checkpoint " + ckpt.string() + " --data " + (corpus / "test.tsv").string() +
                            " --filter " + (corpus / "identity.txt").string() + " --out " +
                            (tmp.path / "eval.jsonl").string(),
                        tmp.path);
  CHECK_MESSAGE(eval.status == 0, eval.output);
  CHECK(fs::exists(tmp.path / "eval.jsonl"));

  const auto attr = run_cli("attribute --checkpoint " + ckpt.string() + " --text \"you idiot\" --ig-steps 5", tmp.path);
  CHECK_MESSAGE(attr.status == 0, attr.output);
  CHECK(attr.output.find("idiot[") != std::string::npos);
  CHECK(run_cli("attribute --checkpoint " + ckpt.string(), tmp.path).status != 0);
}
