#include "taskshift/gnuplot.hpp"

#include <fstream>
#include <sstream>

#include "taskshift/error.hpp"

namespace taskshift {

namespace {

std::string preamble(const std::string& png, const std::string& title, bool logx, bool logy) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set datafile missing ''\n"
    << "set datafile columnheaders\n"
    << "set terminal pngcairo size 900,600\n"
    << "set output '" << png << "'\n"
    << "set title '" << title << "'\n"
    << "set key outside right\n";
  if (logx) s << "set logscale x\n";
  if (logy) s << "set logscale y\n";
  return s.str();
}

// Mean with std error bars for one (sweep, estimator) slice of agg.csv.
std::string series(const std::string& sweep, const std::string& estimator, const std::string& x,
                   const std::string& metric, const std::string& title) {
  std::ostringstream s;
  s << "'agg.csv' using "
    << "(strcol('sweep') eq '" << sweep << "' && strcol('estimator') eq '" << estimator
    << "' ? column('" << x << "') : NaN):(column('" << metric << "_mean')):(column('" << metric
    << "_std')) with yerrorlines title '" << title << "'";
  return s.str();
}

void write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out << text;
}

}  // namespace

void write_gnuplot_scripts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const RowSchema& schema) {
  {
    std::ostringstream s;
    s << preamble("risk_vs_n.png", cfg.name + ": regression risk", true, true)
      << "set xlabel 'n'\nset ylabel 'risk'\nplot ";
    bool first = true;
    for (auto id : cfg.estimators) {
      if (!first) s << ", \\\n     ";
      s << series("n", to_string(id), "n", "risk", to_string(id));
      first = false;
    }
    s << "\n";
    write(dir / "risk_vs_n.gp", s.str());
  }

  if (!schema.support_labels.empty() && cfg.has(EstimatorId::ClsMni)) {
    std::ostringstream s;
    s << preamble("theta_vs_n.png", cfg.name + ": classification MNI coordinates", true, true)
      << "set xlabel 'n'\nset ylabel '|theta_j|'\nplot ";
    bool first = true;
    for (std::size_t label : schema.support_labels) {
      if (!first) s << ", \\\n     ";
      const std::string name = "abs_theta_" + std::to_string(label);
      s << series("n", "cls_mni", "n", name, "j=" + std::to_string(label));
      first = false;
    }
    s << ", \\\n     " << series("n", "cls_mni", "n", "max_abs_head_offsupport", "max off-support, head")
      << ", \\\n     " << series("n", "cls_mni", "n", "max_abs_tail_offsupport", "max off-support, tail")
      << "\n";
    write(dir / "theta_vs_n.gp", s.str());
  }

  if (!cfg.m_grid.empty() && cfg.needs_fewshot()) {
    std::ostringstream s;
    s << preamble("ls_vs_m.png",
                  cfg.name + ": few-shot least squares, n = " + std::to_string(cfg.fixed_n_for_m_sweep),
                  true, true)
      << "set xlabel 'm'\nset ylabel 'risk'\nplot ";
    bool first = true;
    for (auto id : {EstimatorId::ToptPost, EstimatorId::ThresholdPost}) {
      if (!cfg.has(id)) continue;
      if (!first) s << ", \\\n     ";
      s << series("m", to_string(id), "m", "risk", to_string(id));
      first = false;
    }
    s << "\n";
    write(dir / "ls_vs_m.gp", s.str());
  }
}

}  // namespace taskshift
