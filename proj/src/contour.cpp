#include "foliate/contour.hpp"

#include "foliate/errors.hpp"

#include <map>
#include <optional>
#include <utility>

namespace foliate {

std::vector<Polyline> level_set_polylines(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                          const Eigen::MatrixXd& values, double level) {
    const long nx = xs.size();
    const long ny = ys.size();
    if (values.rows() != nx || values.cols() != ny) {
        throw DimensionError("level_set_polylines: values must be xs.size() x ys.size()");
    }
    if (nx < 2 || ny < 2) {
        return {};
    }
    // Grid edges are graph nodes: horizontal edge (i,j)-(i+1,j) and vertical edge (i,j)-(i,j+1).
    const long n_h = (nx - 1) * ny;
    auto h_id = [&](long i, long j) { return i * ny + j; };
    auto v_id = [&](long i, long j) { return n_h + i * (ny - 1) + j; };
    std::map<long, std::array<double, 2>> point;
    auto crossing = [&](long id, long i0, long j0, long i1, long j1) {
        if (!point.count(id)) {
            const double a = values(i0, j0) - level;
            const double b = values(i1, j1) - level;
            const double s = a / (a - b);
            point[id] = {xs[i0] + s * (xs[i1] - xs[i0]), ys[j0] + s * (ys[j1] - ys[j0])};
        }
        return id;
    };

    std::vector<std::pair<long, long>> segments;
    for (long i = 0; i + 1 < nx; ++i) {
        for (long j = 0; j + 1 < ny; ++j) {
            const double c[4] = {values(i, j), values(i + 1, j), values(i + 1, j + 1), values(i, j + 1)};
            bool in[4];
            int mask = 0;
            for (int k = 0; k < 4; ++k) {
                in[k] = c[k] > level;
                mask |= in[k] << k;
            }
            if (mask == 0 || mask == 15) {
                continue;
            }
            // Cell edges: 0 bottom, 1 right, 2 top, 3 left; edge k joins corners k and k+1.
            long edge[4];
            bool cut[4];
            const long ci[4] = {i, i + 1, i + 1, i};
            const long cj[4] = {j, j, j + 1, j + 1};
            const long ids[4] = {h_id(i, j), v_id(i + 1, j), h_id(i, j + 1), v_id(i, j)};
            for (int k = 0; k < 4; ++k) {
                const int k1 = (k + 1) % 4;
                cut[k] = in[k] != in[k1];
                if (cut[k]) {
                    edge[k] = crossing(ids[k], ci[k], cj[k], ci[k1], cj[k1]);
                }
            }
            int cuts[4];
            int n_cut = 0;
            for (int k = 0; k < 4; ++k) {
                if (cut[k]) {
                    cuts[n_cut++] = k;
                }
            }
            if (n_cut == 2) {
                segments.emplace_back(edge[cuts[0]], edge[cuts[1]]);
                continue;
            }
            // Saddle: cut off the corners whose side differs from the cell mean.
            const bool center_in = 0.25 * (c[0] + c[1] + c[2] + c[3]) > level;
            for (int k = 0; k < 4; ++k) {
                if (in[k] != center_in) {
                    segments.emplace_back(edge[(k + 3) % 4], edge[k]);
                }
            }
        }
    }

    std::map<long, std::vector<std::size_t>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        incident[segments[s].first].push_back(s);
        incident[segments[s].second].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<Polyline> lines;
    auto walk = [&](long start) {
        Polyline line{point.at(start)};
        long node = start;
        while (true) {
            std::optional<std::size_t> next;
            for (std::size_t s : incident[node]) {
                if (!used[s]) {
                    next = s;
                    break;
                }
            }
            if (!next) {
                break;
            }
            used[*next] = true;
            node = segments[*next].first == node ? segments[*next].second : segments[*next].first;
            line.push_back(point.at(node));
        }
        lines.push_back(std::move(line));
    };
    for (const auto& [node, segs] : incident) {
        if (segs.size() == 1 && !used[segs[0]]) {
            walk(node);
        }
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!used[s]) {
            walk(segments[s].first);
        }
    }
    return lines;
}

}  // namespace foliate
