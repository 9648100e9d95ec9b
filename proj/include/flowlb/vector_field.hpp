#pragma once

// Steady and unsteady velocity fields sampled during advection.
//
// Two analytic fields (ABC flow, double gyre) and a gridded field loaded
// from a header + raw float32 file pair. All evaluation happens in double
// precision; grid samples are widened from float on read.

#include "flowlb/errors.hpp"
#include "flowlb/vec.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flowlb {

struct AbcParams {
    double A = std::numbers::sqrt3;
    double B = std::numbers::sqrt2;
    double C = 1.0;
};

struct DoubleGyreParams {
    double A = 0.1;
    double eps = 0.25;
    double omega = 2.0 * std::numbers::pi / 10.0;
};

/// Sample storage of a gridded field. Layout is x-fastest, then y, z, time,
/// with components interleaved per sample.
struct GridData {
    std::array<int, 3> dims{2, 2, 1};
    int components = 3;
    int timesteps = 1;
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<float> samples;

    std::size_t index(int i, int j, int k, int tk) const {
        return ((((static_cast<std::size_t>(tk) * dims[2] + k) * dims[1] + j) * dims[0] + i) *
                components);
    }
};

enum class FieldKind { abc_flow, double_gyre, grid };

/// Immutable description of a velocity field. Cheap to copy: grid samples
/// are shared.
class FieldSpec {
  public:
    using Params = std::variant<AbcParams, DoubleGyreParams, std::shared_ptr<const GridData>>;

    FieldSpec(Params params, int spatial_dim, Vec3 domain_min, Vec3 domain_max, double t0,
              double t1)
        : params_(std::move(params)), spatial_dim_(spatial_dim), min_(domain_min),
          max_(domain_max), t0_(t0), t1_(t1) {
        if (spatial_dim_ != 2 && spatial_dim_ != 3)
            throw ConfigError("spatial dimension must be 2 or 3");
        for (int a = 0; a < spatial_dim_; ++a)
            if (!(min_[a] < max_[a]))
                throw ConfigError("domain_min must be below domain_max on every axis");
        if (t1_ < t0_) throw ConfigError("time range is reversed");
    }

    FieldKind kind() const { return static_cast<FieldKind>(params_.index()); }
    const Params& params() const { return params_; }
    int spatial_dim() const { return spatial_dim_; }
    const Vec3& domain_min() const { return min_; }
    const Vec3& domain_max() const { return max_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    bool steady() const { return t1_ == t0_; }

    const GridData* grid() const {
        auto* g = std::get_if<std::shared_ptr<const GridData>>(&params_);
        return g ? g->get() : nullptr;
    }

    bool contains(const Vec3& p) const {
        for (int a = 0; a < spatial_dim_; ++a)
            if (!(p[a] >= min_[a] && p[a] <= max_[a])) return false;
        return true;
    }
    bool contains_time(double t) const { return steady() || (t >= t0_ && t <= t1_); }

  private:
    Params params_;
    int spatial_dim_;
    Vec3 min_;
    Vec3 max_;
    double t0_;
    double t1_;
};

inline FieldSpec make_abc_flow(AbcParams params = {}, Vec3 domain_min = {0, 0, 0},
                               Vec3 domain_max = {2 * std::numbers::pi, 2 * std::numbers::pi,
                                                  2 * std::numbers::pi}) {
    return FieldSpec(params, 3, domain_min, domain_max, 0.0, 0.0);
}

inline FieldSpec make_double_gyre(DoubleGyreParams params = {}, double t0 = 0.0, double t1 = 20.0,
                                  Vec3 domain_min = {0, 0, 0}, Vec3 domain_max = {2, 1, 0}) {
    return FieldSpec(params, 2, domain_min, domain_max, t0, t1);
}

namespace detail {

inline Vec3 abc_velocity(const AbcParams& f, const Vec3& p) {
    return {f.A * std::sin(p.z) + f.C * std::cos(p.y), f.B * std::sin(p.x) + f.A * std::cos(p.z),
            f.C * std::sin(p.y) + f.B * std::cos(p.x)};
}

inline Vec3 double_gyre_velocity(const DoubleGyreParams& g, const Vec3& p, double t) {
    using std::numbers::pi;
    const double s = std::sin(g.omega * t);
    const double a = g.eps * s;
    const double b = 1.0 - 2.0 * g.eps * s;
    const double f = a * p.x * p.x + b * p.x;
    const double dfdx = 2.0 * a * p.x + b;
    return {-pi * g.A * std::sin(pi * f) * std::cos(pi * p.y),
            pi * g.A * std::cos(pi * f) * std::sin(pi * p.y) * dfdx, 0.0};
}

// Continuous index -> (cell, fraction). Snaps to nodes within 1e-9 cells so
// node lookups reproduce stored samples exactly.
inline void cell_coord(double u, int n, int& cell, double& frac) {
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) u = r;
    double c = std::floor(u);
    if (c < 0) c = 0;
    if (c > n - 2) c = n - 2;
    cell = static_cast<int>(c);
    frac = u - c;
}

inline Vec3 grid_velocity(const GridData& g, int spatial_dim, const Vec3& lo, const Vec3& hi,
                          const Vec3& p, double t) {
    int cell[3] = {0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int a = 0; a < spatial_dim; ++a) {
        const double u = (p[a] - lo[a]) / (hi[a] - lo[a]) * (g.dims[a] - 1);
        cell_coord(u, g.dims[a], cell[a], frac[a]);
    }
    int tcell = 0;
    double tfrac = 0.0;
    if (g.timesteps > 1) cell_coord((t - g.t0) / g.dt, g.timesteps, tcell, tfrac);

    const int corners = 1 << spatial_dim;
    const int tslices = g.timesteps > 1 ? 2 : 1;
    Vec3 out;
    for (int ts = 0; ts < tslices; ++ts) {
        const double wt = tslices == 1 ? 1.0 : (ts == 0 ? 1.0 - tfrac : tfrac);
        for (int c = 0; c < corners; ++c) {
            double w = wt;
            int idx[3] = {0, 0, 0};
            for (int a = 0; a < spatial_dim; ++a) {
                const int bit = (c >> a) & 1;
                idx[a] = cell[a] + bit;
                w *= bit ? frac[a] : 1.0 - frac[a];
            }
            if (w == 0.0) continue;
            const std::size_t base = g.index(idx[0], idx[1], idx[2], tcell + ts);
            for (int comp = 0; comp < g.components && comp < 3; ++comp)
                out[comp] += w * static_cast<double>(g.samples[base + comp]);
        }
    }
    return out;
}

} // namespace detail

/// Non-throwing sampler used on the advection hot path. Returns false when
/// (p, t) lies outside the field's spatial domain or time range.
inline bool try_eval(const FieldSpec& field, const Vec3& p, double t, Vec3& out) noexcept {
    if (!field.contains(p) || !field.contains_time(t)) return false;
    switch (field.kind()) {
    case FieldKind::abc_flow:
        out = detail::abc_velocity(std::get<AbcParams>(field.params()), p);
        break;
    case FieldKind::double_gyre:
        out = detail::double_gyre_velocity(std::get<DoubleGyreParams>(field.params()), p, t);
        break;
    case FieldKind::grid:
        out = detail::grid_velocity(*field.grid(), field.spatial_dim(), field.domain_min(),
                                    field.domain_max(), p, t);
        break;
    }
    return true;
}

inline Vec3 eval(const FieldSpec& field, const Vec3& p, double t) {
    if (!field.contains(p)) throw OutOfDomain("sample position lies outside the field domain");
    if (!field.contains_time(t)) throw OutOfTimeRange("sample time lies outside the time range");
    Vec3 v;
    try_eval(field, p, t, v);
    return v;
}

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw MalformedHeader("non-numeric value '" + token + "' for key '" + key + "'");
        }
    }
    return values;
}

} // namespace detail

/// Parses a grid header and its raw little-endian float32 payload.
///
/// Header lines are `key: values` (or `key = values`); `#` starts a comment.
/// Required keys: dims (2 or 3 extents), components, timesteps, domain_min,
/// domain_max; dt is required when timesteps > 1. Optional: t0, type
/// (must be float32), data_file (used only by load_grid_files).
inline FieldSpec load_grid(std::string_view header, std::span<const std::byte> raw) {
    std::optional<std::vector<double>> dims, dmin, dmax;
    std::optional<double> components, timesteps, dt, t0;

    std::istringstream in{std::string(header)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto sep = line.find_first_of(":=");
        if (sep == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw MalformedHeader("line without key separator: '" + line + "'");
            continue;
        }
        std::string key = line.substr(0, sep);
        std::string value = line.substr(sep + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t\r") + 1);

        auto scalar = [&](std::optional<double>& slot) {
            auto v = detail::parse_numbers(value, key);
            if (v.size() != 1) throw MalformedHeader("key '" + key + "' takes one value");
            slot = v.front();
        };
        if (key == "dims") dims = detail::parse_numbers(value, key);
        else if (key == "domain_min") dmin = detail::parse_numbers(value, key);
        else if (key == "domain_max") dmax = detail::parse_numbers(value, key);
        else if (key == "components") scalar(components);
        else if (key == "timesteps") scalar(timesteps);
        else if (key == "dt") scalar(dt);
        else if (key == "t0") scalar(t0);
        else if (key == "type") {
            std::istringstream tv(value);
            std::string type;
            tv >> type;
            if (type != "float32" && type != "float")
                throw MalformedHeader("unsupported scalar type '" + type + "'");
        } else if (key == "data_file") {
        } else {
            throw MalformedHeader("unknown key '" + key + "'");
        }
    }

    if (!dims) throw MalformedHeader("missing key 'dims'");
    if (!components) throw MalformedHeader("missing key 'components'");
    if (!timesteps) throw MalformedHeader("missing key 'timesteps'");
    if (!dmin || !dmax) throw MalformedHeader("missing domain bounds");
    if (dims->size() != 2 && dims->size() != 3)
        throw MalformedHeader("dims must list 2 or 3 extents");

    auto g = std::make_shared<GridData>();
    for (std::size_t a = 0; a < 3; ++a) {
        const double d = a < dims->size() ? (*dims)[a] : 1.0;
        if (d != std::floor(d) || d < 1) throw MalformedHeader("dims must be positive integers");
        g->dims[a] = static_cast<int>(d);
    }
    const int spatial_dim = g->dims[2] == 1 ? 2 : 3;
    for (int a = 0; a < spatial_dim; ++a)
        if (g->dims[a] < 2) throw MalformedHeader("each spatial extent must be at least 2");

    if (*components != 2 && *components != 3)
        throw MalformedHeader("components must be 2 or 3");
    g->components = static_cast<int>(*components);
    if (spatial_dim == 3 && g->components != 3)
        throw MalformedHeader("3D grids need 3 components");
    if (*timesteps < 1 || *timesteps != std::floor(*timesteps))
        throw MalformedHeader("timesteps must be a positive integer");
    g->timesteps = static_cast<int>(*timesteps);
    if (g->timesteps > 1 && (!dt || !(*dt > 0)))
        throw MalformedHeader("unsteady grids need a positive dt");
    g->dt = dt.value_or(0.0);
    g->t0 = t0.value_or(0.0);

    if (static_cast<int>(dmin->size()) < spatial_dim || static_cast<int>(dmax->size()) < spatial_dim)
        throw MalformedHeader("domain bounds need one value per spatial axis");
    Vec3 lo, hi;
    for (int a = 0; a < spatial_dim; ++a) {
        lo[a] = (*dmin)[a];
        hi[a] = (*dmax)[a];
        if (!(lo[a] < hi[a])) throw MalformedHeader("domain_min must be below domain_max");
    }

    const std::size_t count = static_cast<std::size_t>(g->dims[0]) * g->dims[1] * g->dims[2] *
                              g->components * g->timesteps;
    if (raw.size() != count * 4)
        throw SizeMismatch("expected " + std::to_string(count * 4) + " bytes, got " +
                           std::to_string(raw.size()));
    g->samples.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
        std::uint32_t bits;
        std::memcpy(&bits, raw.data() + 4 * s, 4);
        if constexpr (std::endian::native == std::endian::big)
            bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) |
                   (bits >> 24);
        g->samples[s] = std::bit_cast<float>(bits);
    }

    const double t_end = g->t0 + (g->timesteps - 1) * g->dt;
    const double t_begin = g->t0;
    return FieldSpec(std::shared_ptr<const GridData>(std::move(g)), spatial_dim, lo, hi, t_begin,
                     t_end);
}

/// Loads a header file and its raw payload. When `raw_path` is empty the
/// header's data_file key is used, falling back to the header path with a
/// .raw extension.
inline FieldSpec load_grid_files(const std::filesystem::path& header_path,
                                 std::filesystem::path raw_path = {}) {
    std::ifstream hin(header_path);
    if (!hin) throw IoFailure("cannot open grid header " + header_path.string());
    std::string header((std::istreambuf_iterator<char>(hin)), std::istreambuf_iterator<char>());

    if (raw_path.empty()) {
        std::istringstream in(header);
        std::string line;
        while (std::getline(in, line)) {
            const auto sep = line.find_first_of(":=");
            if (sep == std::string::npos) continue;
            std::string key = line.substr(0, sep);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            if (key != "data_file") continue;
            std::istringstream v(line.substr(sep + 1));
            std::string name;
            v >> name;
            raw_path = header_path.parent_path() / name;
        }
        if (raw_path.empty()) raw_path = std::filesystem::path(header_path).replace_extension(".raw");
    }

    std::ifstream rin(raw_path, std::ios::binary);
    if (!rin) throw IoFailure("cannot open grid payload " + raw_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(rin)), std::istreambuf_iterator<char>());
    return load_grid(header, std::as_bytes(std::span<const char>(bytes)));
}

} // namespace flowlb
