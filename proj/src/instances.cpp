#include "qsk/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "qsk/error.hpp"
#include "qsk/matrix_market.hpp"
#include "qsk/rng.hpp"

namespace qsk {

double ProblemInstance::realized_beta() const noexcept {
    return rows() == 0 ? 0.0 : static_cast<double>(corrupted_rows.size()) / static_cast<double>(rows());
}

void GeneratorSpec::validate() const {
    if (m == 0 || n == 0) throw Error(ErrorCode::SpecInvalid, "m and n must be positive");
    if (sparsity > n) throw Error(ErrorCode::SpecInvalid, "sparsity exceeds n");
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorCode::SpecInvalid, "beta must lie in [0, 1)");
    if (!(corruption_scale >= 0.0) || !(noise_bound >= 0.0))
        throw Error(ErrorCode::SpecInvalid, "scales must be nonnegative");
}

std::size_t corruption_count(double beta, std::size_t m) noexcept {
    return static_cast<std::size_t>(std::llround(beta * static_cast<double>(m)));
}

namespace {

// First `count` entries of a partial Fisher-Yates shuffle of 0..n-1, sorted.
IndexSet sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
    IndexSet pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pick = k + rng.uniform_index(n - k);
        std::swap(pool[k], pool[pick]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Corruption then noise, shared by the generator and the importer.
void inject(ProblemInstance& inst, Rng& rng) {
    const std::size_t m = inst.rows();
    const std::size_t count = corruption_count(inst.beta, m);
    if (count > m) throw Error(ErrorCode::SpecInvalid, "beta*m exceeds m");
    inst.corrupted_rows = sample_without_replacement(rng, m, count);
    inst.b_corrupt.assign(m, 0.0);
    for (std::size_t i : inst.corrupted_rows)
        inst.b_corrupt[i] = rng.uniform(-inst.corruption_scale, inst.corruption_scale);
    inst.noise.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) inst.noise[i] = rng.uniform(-inst.noise_bound, inst.noise_bound);
    inst.b_observed.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        inst.b_observed[i] = (inst.b_clean[i] + inst.b_corrupt[i]) + inst.noise[i];
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

ProblemInstance generate_gaussian(const GeneratorSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    Vector entries(spec.m * spec.n);
    for (double& v : entries) v = rng.normal();
    DenseMatrix raw(spec.m, spec.n, std::move(entries));

    IndexSet support = sample_without_replacement(rng, spec.n, spec.sparsity);
    Vector x_hat(spec.n, 0.0);
    for (std::size_t j : support) x_hat[j] = rng.normal();

    ProblemInstance inst;
    inst.a = normalize_rows(raw).matrix;
    inst.b_clean = matvec(inst.a, x_hat);
    inst.x_hat = std::move(x_hat);
    inst.beta = spec.beta;
    inst.corruption_scale = spec.corruption_scale;
    inst.noise_bound = spec.noise_bound;
    inst.seed = spec.seed;
    inject(inst, rng);
    return inst;
}

ProblemInstance make_instance(const DenseMatrix& a, std::optional<Vector> x_hat,
                              std::optional<Vector> rhs, double beta, double corruption_scale,
                              double noise_bound, std::uint64_t seed) {
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorCode::SpecInvalid, "beta must lie in [0, 1)");
    if (!(corruption_scale >= 0.0) || !(noise_bound >= 0.0))
        throw Error(ErrorCode::SpecInvalid, "scales must be nonnegative");
    if (!x_hat && !rhs) throw Error(ErrorCode::SpecInvalid, "need x_hat or a right-hand side");

    auto normalized = normalize_rows(a);
    ProblemInstance inst;
    inst.a = std::move(normalized.matrix);
    if (x_hat) {
        if (x_hat->size() != a.cols())
            throw Error(ErrorCode::DimensionMismatch, "x_hat length does not match matrix columns");
        inst.b_clean = matvec(inst.a, *x_hat);
        inst.x_hat = std::move(x_hat);
    } else {
        if (rhs->size() != a.rows())
            throw Error(ErrorCode::DimensionMismatch, "rhs length does not match matrix rows");
        inst.b_clean = std::move(*rhs);
        for (std::size_t i = 0; i < inst.b_clean.size(); ++i) inst.b_clean[i] /= normalized.scales[i];
    }
    inst.beta = beta;
    inst.corruption_scale = corruption_scale;
    inst.noise_bound = noise_bound;
    inst.seed = seed;
    Rng rng(seed);
    inject(inst, rng);
    return inst;
}

ProblemInstance from_files(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& vector_path, bool vector_is_x_hat,
                           double beta, double corruption_scale, double noise_bound,
                           std::uint64_t seed) {
    DenseMatrix a = mm_read(matrix_path);
    Vector v = mm_read_vector(vector_path);
    if (vector_is_x_hat)
        return make_instance(a, std::move(v), std::nullopt, beta, corruption_scale, noise_bound, seed);
    return make_instance(a, std::nullopt, std::move(v), beta, corruption_scale, noise_bound, seed);
}

void save_bundle(const ProblemInstance& inst, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
    mm_write(dir / "A.mtx", inst.a);
    mm_write(dir / "b.mtx", inst.b_observed);
    mm_write(dir / "btilde.mtx", inst.b_clean);
    mm_write(dir / "bc.mtx", inst.b_corrupt);
    mm_write(dir / "r.mtx", inst.noise);
    if (inst.x_hat) mm_write(dir / "xhat.mtx", *inst.x_hat);

    std::ostringstream meta;
    meta << "m=" << inst.rows() << '\n'
         << "n=" << inst.cols() << '\n'
         << "beta=" << fmt17(inst.beta) << '\n'
         << "corruption_scale=" << fmt17(inst.corruption_scale) << '\n'
         << "noise_bound=" << fmt17(inst.noise_bound) << '\n'
         << "seed=" << inst.seed << '\n'
         << "corrupted_count=" << inst.corrupted_rows.size() << '\n'
         << "noise_inf=" << fmt17(norm_inf(inst.noise)) << '\n'
         << "has_xhat=" << (inst.x_hat ? 1 : 0) << '\n'
         << "corrupted_rows=";
    for (std::size_t k = 0; k < inst.corrupted_rows.size(); ++k)
        meta << (k ? "," : "") << inst.corrupted_rows[k];
    meta << '\n';
    write_file_atomic(dir / "meta.txt", meta.str());
}

namespace {

std::map<std::string, std::string> read_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "expected key=value", line_no);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

} // namespace

ProblemInstance load_bundle(const std::filesystem::path& dir) {
    auto meta = read_meta(dir / "meta.txt");
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end()) throw Error(ErrorCode::ParseError, "meta.txt lacks " + key);
        return it->second;
    };

    ProblemInstance inst;
    inst.a = mm_read(dir / "A.mtx");
    inst.b_observed = mm_read_vector(dir / "b.mtx");
    inst.b_clean = mm_read_vector(dir / "btilde.mtx");
    inst.b_corrupt = mm_read_vector(dir / "bc.mtx");
    inst.noise = mm_read_vector(dir / "r.mtx");
    if (std::filesystem::exists(dir / "xhat.mtx")) inst.x_hat = mm_read_vector(dir / "xhat.mtx");
    inst.beta = std::stod(get("beta"));
    inst.corruption_scale = std::stod(get("corruption_scale"));
    inst.noise_bound = std::stod(get("noise_bound"));
    inst.seed = std::stoull(get("seed"));

    const std::size_t m = inst.rows();
    if (inst.b_observed.size() != m || inst.b_clean.size() != m || inst.b_corrupt.size() != m ||
        inst.noise.size() != m)
        throw Error(ErrorCode::DimensionMismatch, "bundle vectors do not match A");
    if (inst.x_hat && inst.x_hat->size() != inst.cols())
        throw Error(ErrorCode::DimensionMismatch, "xhat does not match A");

    std::istringstream rows_list(get("corrupted_rows"));
    std::string tok;
    while (std::getline(rows_list, tok, ',')) {
        if (tok.empty()) continue;
        const std::size_t i = std::stoull(tok);
        if (i >= m) throw Error(ErrorCode::ParseError, "corrupted row out of range");
        inst.corrupted_rows.push_back(i);
    }
    if (inst.corrupted_rows.size() != std::stoull(get("corrupted_count")))
        throw Error(ErrorCode::ParseError, "corrupted_count disagrees with corrupted_rows");
    return inst;
}

IndexSet corruption_mask(const ProblemInstance& inst) { return inst.corrupted_rows; }

DetectionCounts is_detected(const ProblemInstance& inst, std::span<const std::size_t> acceptable) {
    DetectionCounts counts;
    for (std::size_t i : acceptable) {
        if (std::binary_search(inst.corrupted_rows.begin(), inst.corrupted_rows.end(), i))
            ++counts.corrupted_in_set;
        else
            ++counts.clean_in_set;
    }
    return counts;
}

} // namespace qsk
