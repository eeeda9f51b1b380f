#include "poynting/trace.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "poynting/error.hpp"

namespace poynting {

SolutionTrace::SolutionTrace(const Grid& g, MaterialSet m, double dt, Scheme scheme, int stride)
    : grid_(g), materials_(std::move(m)), dt_(dt), scheme_(scheme), stride_(stride) {
    if (!(dt > 0.0) || stride < 1) {
        throw ContractViolation("trace needs dt > 0 and stride >= 1");
    }
}

double SolutionTrace::t_end() const {
    if (snapshots_.empty()) {
        throw ContractViolation("empty trace");
    }
    return snapshots_.back().t;
}

void SolutionTrace::push(Snapshot s) {
    if (s.e.n() != grid_.n() || s.h.n() != grid_.n() || s.j.n() != grid_.n()) {
        throw ContractViolation("snapshot layout does not match the trace grid");
    }
    if (!snapshots_.empty()) {
        const double expected = snapshots_.front().t + static_cast<double>(snapshots_.size()) * snapshot_dt();
        if (std::abs(s.t - expected) > 1e-9 * snapshot_dt()) {
            throw ContractViolation("snapshot breaks the uniform time grid");
        }
    }
    snapshots_.push_back(std::move(s));
}

namespace {

Snapshot make_snapshot(const Stepper& st, const FieldState& s) {
    Snapshot snap;
    snap.t = s.t;
    snap.e = s.e;
    snap.h = st.synchronized_h(s);
    snap.j = ohm_current(st.sampled(), st.source(), s.e, s.t);
    return snap;
}

}  // namespace

RunResult simulate(const Grid& g, const MaterialSet& m, const StepperConfig& cfg, const EdgeField& e0,
                   const FaceField& h0, long steps, int stride, const StepObserver& observe) {
    if (steps < 0) {
        throw ConfigError("step count must be non-negative");
    }
    if (stride < 0 || (stride > 0 && steps % stride != 0)) {
        throw ConfigError("trace stride must divide the step count");
    }
    Stepper stepper(g, m, cfg);
    FieldState s = stepper.initialize(e0, h0);
    EnergyRecorder recorder(stepper, s);
    RunResult out;
    if (stride > 0) {
        out.trace.emplace(g, m, cfg.dt, cfg.scheme, stride);
        out.trace->push(make_snapshot(stepper, s));
    }
    if (observe) {
        observe(stepper, s);
    }
    for (long n = 0; n < steps; ++n) {
        FieldState prev = s;
        stepper.advance(s);
        out.max_cg_iterations = std::max(out.max_cg_iterations, stepper.last_iterations());
        // accumulate time from the step count so snapshot times stay on the grid
        s.t = static_cast<double>(n + 1) * cfg.dt;
        recorder.record(prev, s);
        if (observe) {
            observe(stepper, s);
        }
        if (stride > 0 && (n + 1) % stride == 0) {
            out.trace->push(make_snapshot(stepper, s));
        }
    }
    out.ledger = recorder.ledger();
    out.j_norm = recorder.j_norm();
    out.e_norm = recorder.e_norm();
    out.final_state = std::move(s);
    return out;
}

namespace {

constexpr std::array<char, 8> kMagic{'P', 'Y', 'N', 'T', 'R', 'C', '0', '1'};
static_assert(std::endian::native == std::endian::little, "trace files are little-endian");

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) {
            throw ConfigError("cannot write trace file " + path.string());
        }
    }
    template <class T>
    void put(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void put_span(std::span<const double> v) {
        out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    }
    void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    void finish(const std::filesystem::path& path) {
        out_.flush();
        if (!out_) {
            throw ConfigError("failed writing trace file " + path.string());
        }
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) {
            throw ParseError("cannot open trace file " + path.string(), "trace");
        }
    }
    template <class T>
    T get(const char* what) {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        check(what);
        return v;
    }
    void get_span(std::span<double> v, const char* what) {
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
        check(what);
    }
    void raw(char* p, std::size_t n, const char* what) {
        in_.read(p, static_cast<std::streamsize>(n));
        check(what);
    }
    [[nodiscard]] bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    void check(const char* what) {
        if (!in_) {
            throw ParseError(std::string("trace file truncated while reading ") + what, what);
        }
    }
    std::ifstream in_;
};

}  // namespace

void write_trace(const std::filesystem::path& path, const SolutionTrace& tr) {
    Writer w(path);
    w.raw(kMagic.data(), kMagic.size());
    const Grid& g = tr.grid();
    for (int a = 0; a < 3; ++a) {
        w.put<std::int32_t>(g.n()[a]);
    }
    for (int a = 0; a < 3; ++a) {
        w.put<double>(g.extent()[a]);
    }
    w.put<std::int32_t>(tr.scheme() == Scheme::leapfrog ? 0 : 1);
    w.put<double>(tr.dt());
    w.put<std::int32_t>(tr.stride());
    const MaterialSet& m = tr.materials();
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        for (const TensorField* t : {&m.eps, &m.mu, &m.sigma}) {
            const SymTensor& s = (*t)[c];
            for (double v : {s.xx, s.yy, s.zz, s.xy, s.yz, s.xz}) {
                w.put<double>(v);
            }
        }
    }
    const SourceSpec& src = m.source;
    w.put<std::int32_t>(static_cast<std::int32_t>(src.kind));
    w.put<double>(src.amplitude);
    for (double v : src.direction) {
        w.put<double>(v);
    }
    w.put<std::int32_t>(src.center ? 1 : 0);
    const Real3 center = src.center.value_or(Real3{});
    for (double v : center) {
        w.put<double>(v);
    }
    for (double v : {src.width, src.t0, src.tau, src.omega}) {
        w.put<double>(v);
    }
    w.put<std::uint64_t>(tr.size());
    for (const Snapshot& s : tr.snapshots()) {
        w.put<double>(s.t);
        w.put_span(s.e.values());
        w.put_span(s.h.values());
        w.put_span(s.j.values());
    }
    w.finish(path);
}

SolutionTrace read_trace(const std::filesystem::path& path) {
    Reader r(path);
    std::array<char, 8> magic{};
    r.raw(magic.data(), magic.size(), "magic");
    if (magic != kMagic) {
        throw ParseError("not a trace file: " + path.string(), "magic");
    }
    Index3 n{};
    Real3 extent{};
    for (int a = 0; a < 3; ++a) {
        n[a] = r.get<std::int32_t>("grid.n");
    }
    for (int a = 0; a < 3; ++a) {
        extent[a] = r.get<double>("grid.extent");
    }
    const auto scheme_tag = r.get<std::int32_t>("scheme");
    if (scheme_tag != 0 && scheme_tag != 1) {
        throw ParseError("unknown scheme tag in trace file", "scheme");
    }
    const double dt = r.get<double>("dt");
    const auto stride = r.get<std::int32_t>("stride");
    const Grid g(n, extent);
    MaterialSet m = MaterialSet::homogeneous(g, {}, {}, {});
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        for (TensorField* t : {&m.eps, &m.mu, &m.sigma}) {
            SymTensor& s = (*t)[c];
            for (double* v : {&s.xx, &s.yy, &s.zz, &s.xy, &s.yz, &s.xz}) {
                *v = r.get<double>("materials");
            }
        }
    }
    SourceSpec& src = m.source;
    const auto kind = r.get<std::int32_t>("source.kind");
    if (kind < 0 || kind > static_cast<std::int32_t>(SourceKind::modulated)) {
        throw ParseError("unknown source kind in trace file", "source.kind");
    }
    src.kind = static_cast<SourceKind>(kind);
    src.amplitude = r.get<double>("source.amplitude");
    for (double& v : src.direction) {
        v = r.get<double>("source.direction");
    }
    const bool has_center = r.get<std::int32_t>("source.center") != 0;
    Real3 center{};
    for (double& v : center) {
        v = r.get<double>("source.center");
    }
    if (has_center) {
        src.center = center;
    }
    for (double* v : {&src.width, &src.t0, &src.tau, &src.omega}) {
        *v = r.get<double>("source");
    }
    SolutionTrace tr(g, std::move(m), dt, scheme_tag == 0 ? Scheme::leapfrog : Scheme::midpoint, stride);
    const auto count = r.get<std::uint64_t>("snapshot count");
    for (std::uint64_t k = 0; k < count; ++k) {
        Snapshot s{0.0, EdgeField(g), FaceField(g), EdgeField(g)};
        s.t = r.get<double>("snapshot time");
        r.get_span(s.e.values(), "snapshot e");
        r.get_span(s.h.values(), "snapshot h");
        r.get_span(s.j.values(), "snapshot j");
        tr.push(std::move(s));
    }
    if (!r.at_end()) {
        throw ParseError("trailing bytes after the last snapshot", "trace");
    }
    return tr;
}

}  // namespace poynting
