// Command-line front end: construct gap tables, render them, and run the
// Livsic / chi / transfer diagnostics with reproducible file outputs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ifskit/analysis.hpp"
#include "ifskit/cantor.hpp"
#include "ifskit/epsilon.hpp"
#include "ifskit/errors.hpp"
#include "ifskit/ifs.hpp"
#include "ifskit/proportions.hpp"
#include "ifskit/render.hpp"
#include "ifskit/transfer.hpp"
#include "ifskit/version.hpp"
#include "ifskit/words.hpp"

namespace {

using nlohmann::ordered_json;

struct PairSpec {
  std::string source = "zero";  // zero | a | b | <path>.json
  double lambda = 0.3;
  std::string s = "2";  // regularity; "inf" allowed
  double gamma = 2.0;
  double eps0 = 0.2;

  double s_value() const {
    if (s == "inf" || s == "infinity")
      return std::numeric_limits<double>::infinity();
    return std::stod(s);
  }

  ifskit::ProportionPair resolve() const {
    if (source == "zero") return ifskit::ProportionPair::constant(lambda);
    if (source == "a")
      return ifskit::as_proportions(
          ifskit::gen_case_a(lambda, s_value(), gamma), 'a');
    if (source == "b")
      return ifskit::as_proportions(
          ifskit::gen_case_b(lambda, s_value(), eps0), 'b');
    std::ifstream in(source);
    if (!in) throw ifskit::io_error("cannot open pair file '" + source + "'");
    ordered_json j = ordered_json::parse(in, nullptr, true);
    return ifskit::ProportionPair::from_json(j);
  }

  ordered_json config() const {
    ordered_json j;
    j["source"] = source;
    j["lambda"] = lambda;
    j["s"] = s;
    j["gamma"] = gamma;
    j["eps0"] = eps0;
    return j;
  }
};

void add_pair_options(CLI::App* cmd, PairSpec& spec) {
  cmd->add_option("--theta,--pair", spec.source,
                  "proportion pair: zero, a, b, or a JSON file path");
  cmd->add_option("--lambda", spec.lambda, "slope in (0, 1/2)");
  cmd->add_option("--s", spec.s, "regularity index (number or inf)");
  cmd->add_option("--gamma", spec.gamma, "exponent for the s=1 family");
  cmd->add_option("--eps0", spec.eps0, "seed value for the case-b family");
  cmd->add_option("--example", spec.source,
                  "alias of --theta for the constructed families");
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ifskit::io_error("cannot open '" + path + "' for writing");
  out << bytes;
  if (!out) throw ifskit::io_error("failed while writing '" + path + "'");
}

ordered_json report_shell(const std::string& command, const ordered_json& cfg) {
  ordered_json j;
  j["version"] = ifskit::kVersion;
  j["command"] = command;
  j["config"] = cfg;
  return j;
}

std::vector<ifskit::Coding> sampled_codings(std::uint64_t seed,
                                            std::size_t count) {
  std::vector<ifskit::Coding> out;
  std::uint64_t state = seed * 2654435761u + 0x9e3779b97f4a7c15ull;
  auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  };
  while (out.size() < count) {
    std::uint64_t r = next();
    std::size_t plen = r % 7;
    std::size_t blen = 1 + (r >> 8) % 4;
    std::string prefix, block;
    for (std::size_t k = 0; k < plen; ++k)
      prefix += ((r >> (16 + k)) & 1) ? '1' : '0';
    for (std::size_t k = 0; k < blen; ++k)
      block += ((r >> (32 + k)) & 1) ? '1' : '0';
    out.emplace_back(ifskit::Word::parse(prefix.empty() ? "e" : prefix),
                     ifskit::Word(block));
  }
  return out;
}

ifskit::Potential parse_potential(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ifskit::domain_error("potential spec needs kind:values");
  std::string kind = spec.substr(0, colon);
  std::vector<double> vals;
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  if (kind == "const" && vals.size() == 1)
    return ifskit::Potential::constant(vals[0]);
  if (kind == "digit" && vals.size() == 3)
    return ifskit::Potential::digit({vals[0], vals[1], vals[2]});
  if (kind == "cob" && vals.size() == 3)
    return ifskit::Potential::coboundary({vals[0], vals[1], vals[2]});
  if (kind == "digit2" && vals.size() == 9) {
    std::array<double, 9> v{};
    std::copy(vals.begin(), vals.end(), v.begin());
    return ifskit::Potential::two_digit(v);
  }
  throw ifskit::domain_error("unrecognized potential spec '" + spec + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"construction and diagnostics for binary Cantor sets and "
               "their pseudo-affine IFS branches"};
  app.set_version_flag("--version", ifskit::kVersion);
  app.require_subcommand(1);

  // construct ---------------------------------------------------------
  auto* construct = app.add_subcommand(
      "construct", "realize a gap table and write CSV + JSON");
  PairSpec c_spec;
  int c_depth = 10;
  double c_tail = 1e-10;
  std::string c_out = "gaps";
  add_pair_options(construct, c_spec);
  construct->add_option("--depth", c_depth, "table depth");
  construct->add_option("--tail-tol", c_tail, "certified tail tolerance");
  construct->add_option("--out", c_out, "output path prefix");

  // render -------------------------------------------------------------
  auto* render = app.add_subcommand("render", "draw the gap structure as SVG");
  PairSpec r_spec;
  int r_depth = 8, r_levels = -1;
  bool r_highlight = false, r_panels = false;
  std::string r_out = "cantor.svg";
  add_pair_options(render, r_spec);
  render->add_option("--depth", r_depth, "table depth");
  render->add_option("--levels", r_levels, "rows to draw (default: depth)");
  render->add_flag("--highlight", r_highlight, "highlight the (01)^k gaps");
  render->add_flag("--panels", r_panels, "add branch and derivative panels");
  render->add_option("--out", r_out, "output SVG path");
  std::string r_branch_csv;
  render->add_option("--branch-csv", r_branch_csv,
                     "also write sampled branch graphs as CSV");

  // livsic ---------------------------------------------------------------
  auto* livsic = app.add_subcommand(
      "livsic", "periodic-data check on constructed branches");
  PairSpec l_spec;
  int l_depth = 12, l_maxlen = 8;
  double l_reltol = 1e-6;
  std::string l_out = "livsic.json";
  add_pair_options(livsic, l_spec);
  livsic->add_option("--depth", l_depth, "branch construction depth");
  livsic->add_option("--maxlen", l_maxlen, "maximum word length");
  livsic->add_option("--rel-tol", l_reltol, "relative tolerance");
  livsic->add_option("--out", l_out, "report path");

  // chi -------------------------------------------------------------------
  auto* chi = app.add_subcommand(
      "chi", "cocycle-ratio traces and the conjugacy verdict");
  PairSpec x_theta, x_eta;
  x_eta.source = "zero";
  std::vector<std::string> x_codings;
  int x_n = 40;
  double x_osc = 1e-6;
  std::uint64_t x_seed = 1;
  std::size_t x_count = 8;
  std::string x_out = "chi.json", x_csv;
  chi->add_option("--theta", x_theta.source,
                  "numerator pair: zero, a, b, or JSON file");
  chi->add_option("--eta", x_eta.source,
                  "denominator pair: zero, a, b, or JSON file");
  chi->add_option("--lambda", x_theta.lambda, "slope for keyword pairs");
  chi->add_option("--s", x_theta.s, "regularity for keyword pairs");
  chi->add_option("--gamma", x_theta.gamma, "exponent for the s=1 family");
  chi->add_option("--eps0", x_theta.eps0, "seed for the case-b family");
  chi->add_option("--coding", x_codings,
                  "coding prefix(block)^inf; repeatable");
  chi->add_option("--n", x_n, "trace depth");
  chi->add_option("--osc-tol", x_osc, "oscillation tolerance");
  chi->add_option("--seed", x_seed, "seed for the sampled ensemble");
  chi->add_option("--count", x_count, "ensemble size when no codings given");
  chi->add_option("--out", x_out, "verdict report path");
  chi->add_option("--trace-csv", x_csv, "optional CSV path for the traces");

  // transfer ----------------------------------------------------------------
  auto* transfer = app.add_subcommand(
      "transfer", "Ruelle operator, pressure, conjugating map, diagnostics");
  std::string t_phi = "const:0";
  int t_depth = 6, t_samples = 500, t_period = 0;
  bool t_verify = false;
  std::string t_out = "transfer.json", t_csv;
  transfer->add_option("--phi", t_phi,
                       "potential: const:c, digit:a,b,c, digit2:v1..v9, "
                       "cob:u0,u1,u2");
  transfer->add_option("--depth", t_depth, "cylinder depth (<= 12)");
  transfer->add_flag("--verify", t_verify, "run the derivative identity check");
  transfer->add_option("--samples", t_samples, "identity check samples");
  transfer->add_option("--period-max", t_period,
                       "run periodic sums up to this period");
  transfer->add_option("--out", t_out, "report path");
  transfer->add_option("--h-csv", t_csv, "optional CSV of the conjugacy maps");

  CLI11_PARSE(app, argc, argv);

  if (construct->parsed()) {
    auto pair = c_spec.resolve();
    ifskit::GapTable table = ifskit::realize(pair, c_depth, c_tail);
    std::ostringstream csv;
    table.to_csv(csv);
    write_file(c_out + ".csv", csv.str());
    ordered_json j = report_shell("construct", [&] {
      ordered_json cfg = c_spec.config();
      cfg["depth"] = c_depth;
      cfg["tail_tol"] = c_tail;
      return cfg;
    }());
    j["table"] = table.to_json();
    j["total"] = 1.0 / table.L();
    write_file(c_out + ".json", j.dump(2) + "\n");
    std::cout << "L=" << table.L() << " total=" << 1.0 / table.L()
              << " tail_bound=" << table.tail_bound() << "\n";
    return 0;
  }

  if (render->parsed()) {
    auto pair = r_spec.resolve();
    ifskit::GapTable table = ifskit::realize(pair, r_depth, 1e-9);
    ifskit::RenderOptions opt;
    opt.levels = r_levels > 0 ? r_levels : r_depth;
    opt.highlight_alternating = r_highlight;
    std::optional<ifskit::IfsBranchPair> branches;
    if (r_panels || !r_branch_csv.empty()) {
      branches = ifskit::build_branches(pair, r_depth, 1e-8);
      if (r_panels) opt.branches = &*branches;
    }
    write_file(r_out, ifskit::render_svg(table, opt));
    if (!r_branch_csv.empty()) {
      std::ostringstream os;
      branches->sample_csv(os, std::size_t{1024}, 1e-7);
      write_file(r_branch_csv, os.str());
    }
    std::cout << "wrote " << r_out << "\n";
    return 0;
  }

  if (livsic->parsed()) {
    auto pair = l_spec.resolve();
    auto branches = ifskit::build_branches(pair, l_depth, 1e-9);
    auto rep = ifskit::livsic_check(branches, l_maxlen, l_reltol);
    ordered_json j = report_shell("livsic", [&] {
      ordered_json cfg = l_spec.config();
      cfg["depth"] = l_depth;
      cfg["maxlen"] = l_maxlen;
      cfg["rel_tol"] = l_reltol;
      return cfg;
    }());
    j["report"] = rep.to_json();
    write_file(l_out, j.dump(2) + "\n");
    std::cout << (rep.pass ? "pass" : "fail")
              << " lambda_hat=" << rep.lambda_hat
              << " worst_word=" << rep.worst_word.str()
              << " worst_dev=" << rep.worst_dev << "\n";
    return 0;
  }

  if (chi->parsed()) {
    x_eta.lambda = x_theta.lambda;
    x_eta.s = x_theta.s;
    x_eta.gamma = x_theta.gamma;
    x_eta.eps0 = x_theta.eps0;
    auto theta = x_theta.resolve();
    auto eta = x_eta.resolve();
    std::vector<ifskit::Coding> codings;
    for (const auto& text : x_codings)
      codings.push_back(ifskit::Coding::parse(text));
    if (codings.empty()) codings = sampled_codings(x_seed, x_count);
    std::vector<ifskit::ChiTrace> traces;
    traces.reserve(codings.size());
    for (const auto& a : codings)
      traces.push_back(ifskit::chi_trace(theta, eta, a, x_n));
    auto verdict = ifskit::conjugacy_verdict(traces, x_osc);
    ordered_json j = report_shell("chi", [&] {
      ordered_json cfg = x_theta.config();
      cfg["eta_source"] = x_eta.source;
      cfg["n"] = x_n;
      cfg["osc_tol"] = x_osc;
      cfg["seed"] = x_seed;
      cfg["count"] = x_count;
      ordered_json cods = ordered_json::array();
      for (const auto& a : codings) cods.push_back(a.str());
      cfg["codings"] = cods;
      return cfg;
    }());
    j["verdict"] = verdict.to_json();
    write_file(x_out, j.dump(2) + "\n");
    if (!x_csv.empty()) {
      std::ostringstream os;
      os << "coding,n,chi\n";
      char buf[160];
      for (const auto& tr : traces)
        for (const auto& [n, v] : tr.values) {
          std::snprintf(buf, sizeof buf, "%s,%d,%.17g\n", tr.coding.str().c_str(),
                        n, v);
          os << buf;
        }
      write_file(x_csv, os.str());
    }
    std::cout << "verdict=" << ifskit::to_string(verdict.verdict)
              << " max_gap=" << verdict.max_gap
              << " spread=" << verdict.spread << "\n";
    return 0;
  }

  if (transfer->parsed()) {
    auto phi = parse_potential(t_phi);
    auto sys = ifskit::build_system(phi, t_depth);
    ordered_json j = report_shell("transfer", [&] {
      ordered_json cfg;
      cfg["phi"] = t_phi;
      cfg["depth"] = t_depth;
      cfg["samples"] = t_samples;
      cfg["period_max"] = t_period;
      return cfg;
    }());
    j["system"] = sys.to_json();
    j["phi_sup_within_quarter"] = phi.within_quarter();
    auto maps = ifskit::conjugating_map(sys);
    if (t_verify) {
      auto rep = ifskit::verify_derivative_identity(sys, maps, phi, t_samples);
      j["derivative_identity"] = {{"max_rel_dev", rep.max_rel_dev},
                                  {"samples_used", rep.samples_used}};
    }
    if (t_period > 0) {
      auto rep = ifskit::periodic_sum_check(phi, t_period);
      j["periodic_sums"] = {{"max_abs_sum", rep.max_abs_sum},
                            {"worst_period", rep.worst_period},
                            {"worst_numerator", rep.worst_numerator}};
    }
    write_file(t_out, j.dump(2) + "\n");
    if (!t_csv.empty()) {
      std::ostringstream os;
      ifskit::sample_conjugacy_csv(maps, os, 729);
      write_file(t_csv, os.str());
    }
    std::cout << "pressure=" << sys.pressure()
              << " states=" << sys.states() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ifskit::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ifskit::capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const ifskit::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
