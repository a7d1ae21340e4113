#include "concord/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "concord/errors.hpp"

namespace concord {

namespace {

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                          "#66ccee", "#aa3377", "#bbbbbb", "#000000"};
constexpr int kPaletteSize = 8;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInputError("cannot open for writing: " + path.string());
    return f;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

void write_regression_fit_svg(const std::filesystem::path& path,
                              const std::vector<double>& xs, const Matrix& agent_rows,
                              const std::vector<double>& reference) {
    if (xs.size() != agent_rows.cols || xs.size() != reference.size() || xs.size() < 2)
        throw InvalidInputError("write_regression_fit_svg: shape mismatch");
    const int width = 640;
    const int height = 420;
    const int margin = 40;
    const double lo = xs.front();
    const double hi = xs.back();

    double y_lo = reference.front();
    double y_hi = reference.front();
    for (double y : reference) {
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }
    for (double y : agent_rows.data) {
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }
    if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1.0;

    auto px = [&](double x) {
        return margin + (x - lo) / (hi - lo) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
    };

    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"#444\"/>\n";
    f << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"#444\"/>\n";

    auto polyline = [&](const double* ys, const char* color, bool dashed) {
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (dashed) f << " stroke-dasharray=\"6,4\"";
        f << " points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            f << num(px(xs[i])) << ',' << num(py(ys[i])) << ' ';
        f << "\"/>\n";
    };
    polyline(reference.data(), "#888888", true);
    for (std::size_t i = 0; i < agent_rows.rows; ++i)
        polyline(agent_rows.row(i), kPalette[i % kPaletteSize], false);

    for (std::size_t i = 0; i < agent_rows.rows; ++i) {
        f << "<text x=\"" << width - margin - 90 << "\" y=\"" << margin + 16 * (i + 1)
          << "\" fill=\"" << kPalette[i % kPaletteSize] << "\" font-size=\"12\">agent "
          << i << "</text>\n";
    }
    f << "</svg>\n";
}

void write_trust_heatmap_svg(const std::filesystem::path& path, const Matrix& w) {
    const int cell = 56;
    const int margin = 30;
    const int width = margin * 2 + cell * static_cast<int>(w.cols);
    const int height = margin * 2 + cell * static_cast<int>(w.rows);

    double hi = 0.0;
    for (double v : w.data) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;

    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < w.rows; ++i) {
        for (std::size_t j = 0; j < w.cols; ++j) {
            const double rel = w(i, j) / hi;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - rel)));
            const int x = margin + cell * static_cast<int>(j);
            const int y = margin + cell * static_cast<int>(i);
            f << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
              << ",255)\" stroke=\"#333\"/>\n";
            char label[16];
            std::snprintf(label, sizeof(label), "%.3f", w(i, j));
            f << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
              << "\" text-anchor=\"middle\" font-size=\"11\" fill=\""
              << (rel > 0.6 ? "#ffffff" : "#000000") << "\">" << label << "</text>\n";
        }
    }
    f << "</svg>\n";
}

Matrix decision_grid(const MlpModel& model, double lo, double hi, int resolution) {
    if (resolution < 2) throw InvalidInputError("decision_grid: resolution too small");
    Matrix inputs(static_cast<std::size_t>(resolution) * resolution, 2);
    std::size_t row = 0;
    for (int iy = 0; iy < resolution; ++iy) {
        const double y = lo + (hi - lo) * iy / (resolution - 1);
        for (int ix = 0; ix < resolution; ++ix, ++row) {
            inputs(row, 0) = lo + (hi - lo) * ix / (resolution - 1);
            inputs(row, 1) = y;
        }
    }
    const Matrix probs = mlp_forward(model, inputs);
    Matrix grid(static_cast<std::size_t>(resolution), static_cast<std::size_t>(resolution));
    row = 0;
    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix, ++row) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < probs.cols; ++c)
                if (probs(row, c) > probs(row, arg)) arg = c;
            grid(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) =
                static_cast<double>(arg);
        }
    return grid;
}

void write_decision_grid_csv(const std::filesystem::path& path, const Matrix& grid,
                             double lo, double hi) {
    auto f = open_out(path);
    f << "x,y,class\n";
    const auto res = grid.rows;
    for (std::size_t iy = 0; iy < res; ++iy) {
        const double y = lo + (hi - lo) * static_cast<double>(iy) / (res - 1);
        for (std::size_t ix = 0; ix < grid.cols; ++ix) {
            const double x = lo + (hi - lo) * static_cast<double>(ix) / (grid.cols - 1);
            f << format_double(x) << ',' << format_double(y) << ','
              << static_cast<int>(grid(iy, ix)) << '\n';
        }
    }
}

void write_decision_grid_svg(const std::filesystem::path& path, const Matrix& grid) {
    const int cell = 3;
    const int width = cell * static_cast<int>(grid.cols);
    const int height = cell * static_cast<int>(grid.rows);
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
    // run-length merge per row; the raster rows go bottom-up
    for (std::size_t iy = 0; iy < grid.rows; ++iy) {
        const int y = height - cell * static_cast<int>(iy + 1);
        std::size_t start = 0;
        while (start < grid.cols) {
            std::size_t end = start + 1;
            while (end < grid.cols && grid(iy, end) == grid(iy, start)) ++end;
            const int cls = static_cast<int>(grid(iy, start));
            f << "<rect x=\"" << cell * static_cast<int>(start) << "\" y=\"" << y
              << "\" width=\"" << cell * static_cast<int>(end - start) << "\" height=\""
              << cell << "\" fill=\"" << kPalette[cls % kPaletteSize] << "\"/>\n";
            start = end;
        }
    }
    f << "</svg>\n";
}

}  // namespace concord
