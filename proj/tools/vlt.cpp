// vlt: command-line layout transfer.
//
//   vlt transfer --target A.svg --source B.svg --out out.svg [--auto]
//                [--optimize N] [--seed N] [--weights w.json]
//                [--dump-rules rules.json] [--script commands.json]
//   vlt rules design.svg [--json]
//   vlt match A.svg B.svg [--json]
//   vlt serve [--port N] [--data DIR]

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vlt/service.hpp"
#include "vlt/vlt.hpp"

namespace {

enum Exit { ok = 0, input_error = 1, infeasible = 2 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vlt::Error(vlt::ErrorCode::invalid_argument, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw vlt::Error(vlt::ErrorCode::invalid_argument, "cannot write " + path);
}

vlt::json parse_json_file(const std::string& path) {
  try {
    return vlt::json::parse(read_file(path));
  } catch (const vlt::json::parse_error& e) {
    throw vlt::Error(vlt::ErrorCode::invalid_argument, path + ": " + e.what());
  }
}

void print_rules(const vlt::RuleSet& rules) {
  for (const auto& r : rules.rules) {
    std::cout << r.id << "  " << vlt::variant_key(r.variant) << "  [";
    for (std::size_t i = 0; i < r.members.size(); ++i) std::cout << (i ? " " : "") << r.members[i];
    std::cout << "]\n";
  }
}

struct TransferArgs {
  std::string target, source, out;
  bool automatic = false;
  int optimize = -1;
  std::uint64_t seed = 0;
  std::string weights, dump_rules, script;
};

int run_transfer(const TransferArgs& args) {
  vlt::Session s = vlt::Session::create("cli", read_file(args.target), read_file(args.source));
  if (!args.weights.empty()) {
    const vlt::WeightConfig w = vlt::wire::weights_from_json(parse_json_file(args.weights));
    for (const auto& [id, value] : w.rule_weights) s.mutate({{"type", "set_weight"}, {"rule", id}, {"weight", value}});
    s.mutate({{"type", "set_weight"}, {"term", "offset"}, {"weight", w.offset}});
    s.mutate({{"type", "set_weight"}, {"term", "consistency"}, {"weight", w.consistency}});
    s.mutate({{"type", "set_weight"}, {"term", "sigma"}, {"weight", w.sigma}});
  }
  if (args.automatic) s.mutate({{"type", "global_copy"}});
  if (!args.script.empty()) {
    for (const auto& c : vlt::script_commands(parse_json_file(args.script))) s.mutate(c);
  }
  if (args.optimize >= 0) s.mutate({{"type", "optimize"}, {"budget", args.optimize}, {"seed", args.seed}});
  write_file(args.out, s.export_svg());
  if (!args.dump_rules.empty()) {
    vlt::json rules{{"target", vlt::wire::to_json(s.target_rules())},
                    {"source", vlt::wire::to_json(s.source_rules())},
                    {"output", vlt::wire::to_json(s.output_rules())}};
    write_file(args.dump_rules, rules.dump(2) + "\n");
  }
  const auto r = s.current_reward();
  std::printf("reward %.6f (rule %.6f, text %.6f, consistency %.6f)\n", r.total, r.r_rule, r.r_off, r.r_con);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout transfer between SVG designs"};
  app.require_subcommand(1);

  TransferArgs t;
  auto* transfer = app.add_subcommand("transfer", "Transfer the source layout onto the target");
  transfer->add_option("--target", t.target, "Target design A")->required();
  transfer->add_option("--source", t.source, "Source design B")->required();
  transfer->add_option("--out", t.out, "Output SVG")->required();
  transfer->add_flag("--auto", t.automatic, "Start with a global layout copy");
  transfer->add_option("--optimize", t.optimize, "Optimizer iteration budget");
  transfer->add_option("--seed", t.seed, "Optimizer seed");
  transfer->add_option("--weights", t.weights, "Weight config JSON");
  transfer->add_option("--dump-rules", t.dump_rules, "Write target/source/output rules as JSON");
  transfer->add_option("--script", t.script, "Command script JSON applied in order");

  std::string rules_path;
  bool rules_json = false;
  auto* rules = app.add_subcommand("rules", "Infer layout rules of a design");
  rules->add_option("design", rules_path)->required();
  rules->add_flag("--json", rules_json);

  std::string match_a, match_b;
  bool match_json = false;
  auto* match = app.add_subcommand("match", "Match elements of two designs");
  match->add_option("a", match_a)->required();
  match->add_option("b", match_b)->required();
  match->add_flag("--json", match_json);

  int port = -1;
  std::string data_dir = "vlt-sessions";
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "Port (default $VLT_PORT or 7342)");
  serve->add_option("--host", host);
  serve->add_option("--data", data_dir, "Session storage directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : input_error;
  }

  try {
    if (*transfer) return run_transfer(t);
    if (*rules) {
      const auto rs = vlt::infer_rules(vlt::parse_design(read_file(rules_path)).design);
      if (rules_json) std::cout << vlt::wire::to_json(rs).dump(2) << "\n";
      else print_rules(rs);
      return ok;
    }
    if (*match) {
      const auto a = vlt::parse_design(read_file(match_a)).design;
      const auto b = vlt::parse_design(read_file(match_b)).design;
      const auto m = vlt::match_designs(a, b);
      if (match_json) {
        std::cout << vlt::wire::to_json(m).dump(2) << "\n";
      } else {
        for (const auto& p : m.pairs) std::printf("%s -> %s  %.4f\n", p.a.c_str(), p.b.c_str(), p.score);
      }
      return ok;
    }
    if (*serve) {
      if (port < 0) port = vlt::service_port_from_env();
      vlt::Service service{std::filesystem::path(data_dir)};
      httplib::Server server;
      service.install(server);
      std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
      return server.listen(host, port) ? ok : input_error;
    }
  } catch (const vlt::Error& e) {
    std::fprintf(stderr, "vlt: %s\n", e.what());
    return vlt::is_input_error(e.code()) ? input_error : infeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vlt: %s\n", e.what());
    return input_error;
  }
  return ok;
}
