#include "memod/svg.hpp"

#include <iomanip>

namespace memod {

std::string svg_num(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  std::string s = out.str();
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string svg_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                     double stroke_width) {
  body_ << "<line x1=\"" << svg_num(x1) << "\" y1=\"" << svg_num(y1) << "\" x2=\"" << svg_num(x2)
        << "\" y2=\"" << svg_num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
        << svg_num(stroke_width) << "\"/>\n";
}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill) {
  body_ << "<rect x=\"" << svg_num(x) << "\" y=\"" << svg_num(y) << "\" width=\"" << svg_num(w)
        << "\" height=\"" << svg_num(h) << "\" fill=\"" << fill << "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill) {
  body_ << "<circle cx=\"" << svg_num(cx) << "\" cy=\"" << svg_num(cy) << "\" r=\"" << svg_num(r)
        << "\" fill=\"" << fill << "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, double font_size,
                     const std::string& anchor) {
  body_ << "<text x=\"" << svg_num(x) << "\" y=\"" << svg_num(y) << "\" font-size=\""
        << svg_num(font_size) << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
        << "\">" << svg_escape(content) << "</text>\n";
}

std::string SvgCanvas::finish() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(width_)
      << "\" height=\"" << svg_num(height_) << "\" viewBox=\"0 0 " << svg_num(width_) << " "
      << svg_num(height_) << "\">\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

}  // namespace memod
