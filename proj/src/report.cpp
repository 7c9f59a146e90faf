#include "goldsci/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "goldsci/error.hpp"
#include "goldsci/stats.hpp"

namespace goldsci::report {

namespace {

using nlohmann::ordered_json;

// JSON has no infinities; they are written as the strings "-inf" / "inf".
ordered_json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

Format parse_format(std::string_view name) {
  if (name == "text") return Format::Text;
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw DomainError("unknown output format '" + std::string(name) + "'");
}

Analysis analyze_trial(const TrialData& trial, const DesignParams& params, std::span<const Method> methods) {
  params.validate();
  const Contrasts c = contrasts(trial);
  const double z = params.alpha == 0.5 ? 0.0 : stats::upper_critical_value(params.alpha);
  Analysis a;
  a.variance_mode = std::holds_alternative<KnownSigma>(trial.variance) ? "known-sigma" : "pooled";
  a.iu_filter_threshold = z * (c.se_EP - c.se_ER) + params.delta0;
  a.superiority_threshold = z * c.se_RP;
  for (Method m : methods) {
    const SciResult sci = compute_sci(m, trial, params);
    a.rows.push_back({sci, adjudicate_success(sci, params)});
  }
  return a;
}

void write_analysis(std::ostream& os, const Analysis& a, Format f) {
  switch (f) {
    case Format::Csv:
      os << "method,filter,filter_holds,ell_EP,ell_ER,L_EP,L_ER,level_EP,level_ER,gatekeeper_rejected,"
            "verdict,variance_mode\n";
      for (const auto& r : a.rows) {
        os << to_string(r.sci.method) << ',' << to_string(r.sci.filter_used) << ','
           << (r.sci.filter_holds ? 1 : 0) << ',' << format_number(r.sci.ell_EP) << ','
           << format_number(r.sci.ell_ER) << ',' << format_number(r.sci.L_EP) << ','
           << format_number(r.sci.L_ER) << ',' << format_number(r.sci.levels.ep) << ','
           << format_number(r.sci.levels.er) << ',' << (r.outcome.gatekeeper_rejected ? 1 : 0) << ','
           << to_string(r.outcome.verdict) << ',' << a.variance_mode << '\n';
      }
      return;
    case Format::Json: {
      ordered_json rows = ordered_json::array();
      for (const auto& r : a.rows) {
        rows.push_back({{"method", to_string(r.sci.method)},
                        {"filter", to_string(r.sci.filter_used)},
                        {"filter_holds", r.sci.filter_holds},
                        {"ell_EP", num(r.sci.ell_EP)},
                        {"ell_ER", num(r.sci.ell_ER)},
                        {"L_EP", num(r.sci.L_EP)},
                        {"L_ER", num(r.sci.L_ER)},
                        {"level_EP", num(r.sci.levels.ep)},
                        {"level_ER", num(r.sci.levels.er)},
                        {"gatekeeper_rejected", r.outcome.gatekeeper_rejected},
                        {"verdict", to_string(r.outcome.verdict)},
                        {"variance_mode", a.variance_mode}});
      }
      os << rows.dump(2) << '\n';
      return;
    }
    case Format::Text:
      os << "variance mode: " << a.variance_mode << '\n'
         << "IU filter holds iff X_R - X_P >= " << format_number(a.iu_filter_threshold) << '\n'
         << "superiority filter holds iff X_R - X_P >= " << format_number(a.superiority_threshold) << '\n';
      for (const auto& r : a.rows) {
        os << '\n'
           << "[" << to_string(r.sci.method) << "]\n"
           << "  unadjusted   ell_EP = " << format_number(r.sci.ell_EP)
           << "   ell_ER = " << format_number(r.sci.ell_ER) << '\n'
           << "  bounds       L_EP   = " << format_number(r.sci.L_EP) << "   L_ER   = " << format_number(r.sci.L_ER)
           << '\n'
           << "  levels       EP = " << format_number(r.sci.levels.ep) << "   ER = " << format_number(r.sci.levels.er)
           << '\n'
           << "  " << to_string(r.sci.filter_used) << " filter: " << yes_no(r.sci.filter_holds)
           << "   gatekeeper rejected: " << yes_no(r.outcome.gatekeeper_rejected) << '\n'
           << "  verdict: " << to_string(r.outcome.verdict) << '\n';
      }
      return;
  }
}

void write_design(std::ostream& os, std::span<const DesignRow> rows, Format f) {
  if (f == Format::Json) {
    ordered_json out = ordered_json::array();
    for (const auto& r : rows) {
      out.push_back({{"method", to_string(r.result.method)},
                     {"scenario", r.scenario},
                     {"n_E", r.result.n_E},
                     {"n_R", r.result.n_R},
                     {"n_P", r.result.n_P},
                     {"N", r.result.N},
                     {"achieved_power", num(r.result.achieved_power)}});
    }
    os << out.dump(2) << '\n';
    return;
  }
  if (f == Format::Csv) {
    os << "method,scenario,n_E,n_R,n_P,N,achieved_power\n";
    for (const auto& r : rows) {
      os << to_string(r.result.method) << ',' << r.scenario << ',' << r.result.n_E << ',' << r.result.n_R << ','
         << r.result.n_P << ',' << r.result.N << ',' << format_number(r.result.achieved_power) << '\n';
    }
    return;
  }
  for (const auto& r : rows) {
    os << to_string(r.result.method) << " (" << to_string(r.result.filter) << " filter), scenario " << r.scenario
       << ": n_E = " << r.result.n_E << ", n_R = " << r.result.n_R << ", n_P = " << r.result.n_P
       << ", N = " << r.result.N << ", power = " << format_number(r.result.achieved_power) << '\n';
  }
}

void write_simulation(std::ostream& os, std::span<const SimulationSummary> rows, Format f) {
  auto v_text = [](const SimulationSummary& s) { return s.v ? format_number(*s.v) : std::string(); };
  if (f == Format::Json) {
    ordered_json out = ordered_json::array();
    for (const auto& s : rows) {
      for (const auto& m : s.methods) {
        out.push_back({{"v", s.v ? num(*s.v) : ordered_json()},
                       {"method", to_string(m.method)},
                       {"filter_rate", num(m.filter_rate)},
                       {"pos_total", num(m.pos_total)},
                       {"pos_ER", num(m.pos_ER)},
                       {"pos_EP", num(m.pos_EP)},
                       {"median_L_EP", num(m.median_L_EP)},
                       {"median_L_ER", num(m.median_L_ER)},
                       {"reps", s.reps},
                       {"seed", s.seed}});
      }
    }
    os << out.dump(2) << '\n';
    return;
  }
  if (f == Format::Csv) {
    os << "v,method,filter_rate,pos_total,pos_ER,pos_EP,median_L_EP,median_L_ER,reps,seed\n";
    for (const auto& s : rows) {
      for (const auto& m : s.methods) {
        os << v_text(s) << ',' << to_string(m.method) << ',' << format_number(m.filter_rate) << ','
           << format_number(m.pos_total) << ',' << format_number(m.pos_ER) << ',' << format_number(m.pos_EP) << ','
           << format_number(m.median_L_EP) << ',' << format_number(m.median_L_ER) << ',' << s.reps << ','
           << s.seed << '\n';
      }
    }
    return;
  }
  for (const auto& s : rows) {
    os << "v = " << (s.v ? format_number(*s.v) : std::string("n/a")) << "  (reps " << s.reps << ", seed " << s.seed
       << ")\n";
    for (const auto& m : s.methods) {
      os << "  " << to_string(m.method) << ": filter " << format_number(100.0 * m.filter_rate) << "%, PoS "
         << format_number(100.0 * m.pos_total) << "% (ER " << format_number(100.0 * m.pos_ER) << "%, EP "
         << format_number(100.0 * m.pos_EP) << "%), median L_EP " << format_number(m.median_L_EP)
         << ", median L_ER " << format_number(m.median_L_ER) << '\n';
    }
  }
}

}  // namespace goldsci::report
