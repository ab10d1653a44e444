// limodel: analytic model and kernel verification for composition operators.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "limodel/limodel.hpp"

namespace {

struct Builtin {
  const char* name;
  const char* description;
};

constexpr Builtin kBuiltins[] = {
    {"cycle", "finite cycle 1 -> 2 -> ... -> n -> 1 with weights"},
    {"bilateral", "weighted bilateral shift on -N..N (rule unit or half_below_zero)"},
    {"ray_cycle", "cycle 0 -> k -> ... -> 0 with a weighted ray attached at k"},
    {"rooted_ray", "unilateral shift on a rooted ray 0, 1, ..., N"},
    {"branching_tree", "root, spine and weighted rays from one branching vertex"},
    {"ray_line", "rootless backbone with rays attached at b0"},
    {"rooted_tree", "explicit parent links"},
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw limodel::Error(limodel::ErrorKind::config_parse, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int write_output(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "limodel: cannot write '" << out << "'\n";
    return 2;
  }
  f << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limodel: Laurent model, reproducing kernel and radii for weighted composition operators"};
  app.set_version_flag("--version", std::string(limodel::kVersion));
  app.require_subcommand(1);

  std::string format = "json";
  std::string out;
  std::optional<std::size_t> depth;
  std::optional<std::uint64_t> seed;
  std::string config_path;

  auto add_run = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--format", format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_option("--out", out, "write the report here instead of stdout");
    sub->add_option("--depth-override", depth, "verification depth");
    sub->add_option("--seed", seed, "seed for random test vectors");
    return sub;
  };
  CLI::App* verify = add_run("verify", "run the full verification suite");
  CLI::App* model = add_run("model", "model coefficients and intertwining checks");
  CLI::App* kernel = add_run("kernel", "kernel blocks and kernel checks");
  CLI::App* radii = add_run("radii", "radii estimates");
  CLI::App* examples = app.add_subcommand("examples", "built-in system families");
  examples->add_subcommand("list", "list built-in families")->final_callback([] {
    for (const auto& b : kBuiltins) std::cout << b.name << "\t" << b.description << "\n";
  });
  examples->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);
  if (examples->parsed()) return 0;

  limodel::RunOptions opt;
  if (model->parsed()) opt.mode = limodel::Mode::model;
  if (kernel->parsed()) opt.mode = limodel::Mode::kernel;
  if (radii->parsed()) opt.mode = limodel::Mode::radii;
  (void)verify;
  if (depth) opt.depth_override = *depth;
  opt.seed = seed;
  const limodel::Format fmt = limodel::parse_format(format);

  limodel::JobConfig cfg;
  try {
    cfg = limodel::parse_config(read_file(config_path));
  } catch (const limodel::Error& err) {
    std::cerr << "limodel: " << err.what() << "\n";
    const int rc = write_output(limodel::render_error(err, fmt), out);
    return rc ? rc : 2;
  }

  limodel::Report rep = limodel::run_verify(cfg, opt);
  rep.command = app.get_subcommands().front()->get_name();
  if (const int rc = write_output(limodel::render(rep, fmt), out)) return rc;
  return rep.exit_code();
}
