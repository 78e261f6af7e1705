#pragma once

#include <algorithm>
#include <cstdio>
#include <string>

#include "ifskit/cantor.hpp"
#include "ifskit/ifs.hpp"
#include "ifskit/proportions.hpp"
#include "ifskit/words.hpp"

namespace ifskit {

struct RenderOptions {
  int levels = 5;                        // rows: gap generations 0..levels-1
  bool highlight_alternating = false;    // color the (01)^k chain gaps
  const IfsBranchPair* branches = nullptr;  // adds graph panels when set
  int panel_samples = 400;
  double panel_tol = 1e-7;
};

// One horizontal bar per gap generation, gaps drawn as rectangles; optional
// panels graph the branches and their derivatives. Output bytes depend only
// on the inputs.
inline std::string render_svg(const GapTable& table, const RenderOptions& opt) {
  const int width = 880, margin = 20, row_h = 26, bar_h = 18;
  int levels = std::min(opt.levels, table.depth() + 1);
  int panels = opt.branches != nullptr ? 2 : 0;
  const int panel_h = 220;
  int height = 2 * margin + levels * row_h + panels * (panel_h + margin);

  std::string svg;
  char buf[256];
  auto emit = [&](const char* text) { svg += text; };
  auto emitf = [&](auto... args) {
    std::snprintf(buf, sizeof buf, args...);
    svg += buf;
  };

  emitf("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
        "viewBox=\"0 0 %d %d\">\n",
        width + 2 * margin, height, width + 2 * margin, height);
  emit("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");

  auto xpix = [&](double t) {
    return static_cast<double>(margin) + t * width;
  };

  for (int n = 0; n < levels; ++n) {
    double y = margin + static_cast<double>(n) * row_h;
    emitf("<rect x=\"%.4f\" y=\"%.4f\" width=\"%d\" height=\"%d\" "
          "fill=\"#dfe8f0\"/>\n",
          xpix(0.0), y, width, bar_h);
    for (const auto& r : table.rows()) {
      if (static_cast<int>(r.word.size()) != n) continue;
      bool hl = opt.highlight_alternating &&
                detail::alternating01_power(r.word, 0) >= 0;
      emitf("<rect x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" height=\"%d\" "
            "fill=\"%s\"/>\n",
            xpix(r.a), y, (r.b - r.a) * width, bar_h,
            hl ? "#e06020" : "#4f86c6");
    }
  }

  if (opt.branches != nullptr) {
    const IfsBranchPair& br = *opt.branches;
    double top = margin + static_cast<double>(levels) * row_h + margin;
    for (int panel = 0; panel < 2; ++panel) {
      double y0 = top + panel * (panel_h + margin);
      emitf("<rect x=\"%d\" y=\"%.4f\" width=\"%d\" height=\"%d\" "
            "fill=\"none\" stroke=\"#888888\"/>\n",
            margin, y0, width, panel_h);
      for (int i = 0; i < 2; ++i) {
        std::string points;
        double hi = panel == 0 ? 1.0 : 1.2;
        for (int s = 0; s <= opt.panel_samples; ++s) {
          double t = static_cast<double>(s) / opt.panel_samples;
          double v = panel == 0 ? br.eval(i, t, opt.panel_tol)
                                : br.eval_derivative(i, t);
          double yy = y0 + panel_h - std::clamp(v / hi, 0.0, 1.0) * panel_h;
          char pt[64];
          std::snprintf(pt, sizeof pt, "%.3f,%.3f ", xpix(t), yy);
          points += pt;
        }
        emitf("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.2\" "
              "points=\"",
              i == 0 ? "#2060c0" : "#c03030");
        emit(points.c_str());
        emit("\"/>\n");
      }
    }
  }

  emit("</svg>\n");
  return svg;
}

}  // namespace ifskit
