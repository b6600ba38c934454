#pragma once

#include <sstream>
#include <string>

namespace memod {

// Minimal deterministic SVG writer: fixed-precision coordinates so the
// same inputs always produce the same bytes.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& content, double font_size = 12.0,
            const std::string& anchor = "start");

  std::string finish() const;

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

std::string svg_num(double v);
std::string svg_escape(const std::string& text);

}  // namespace memod
