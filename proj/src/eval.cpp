#include "mcduct/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "mcduct/errors.hpp"
#include "mcduct/hashio.hpp"
#include "mcduct/log.hpp"

namespace mcduct {

double nrmse(const std::vector<double>& ref, const std::vector<double>& pred) {
    if (ref.size() != pred.size()) raise_invalid("nrmse: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = pred[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    if (!(den > 0.0)) raise_invalid("nrmse: reference has zero energy");
    return std::sqrt(num) / std::sqrt(den);
}

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) raise_invalid("ecdf needs at least one value");
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::fraction(std::size_t i) const {
    return static_cast<double>(i + 1) / static_cast<double>(sorted_.size());
}

double Ecdf::percentile(double q) const {
    if (q < 0.0 || q > 1.0) raise_invalid("percentile requires q in [0, 1]");
    const auto n = sorted_.size();
    for (std::size_t i = 0; i < n; ++i)
        if (fraction(i) >= q) return sorted_[i];
    return sorted_.back();
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) raise_invalid("pearson: length mismatch");
    const auto n = x.size();
    if (n < 3) raise_invalid("pearson needs at least 3 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) raise_invalid("pearson: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport evaluate(const ModelBundle& bundle, const SplitData& split, int workers) {
    const auto n = split.params.size();
    if (n == 0) raise_invalid("evaluate: empty split");

    std::vector<double> errors(n, -1.0);
    std::vector<int> skipped(n, 0);
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            double ref_energy = 0.0;
            for (double v : split.waveforms[i]) ref_energy += v * v;
            if (!(ref_energy > 0.0)) {
                skipped[i] = 1;
                continue;
            }
            const auto pred = bundle.predict(split.params[i]);
            errors[i] = nrmse(split.waveforms[i], pred.cir.h);
        }
    };

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    if (n_workers > 1 && n > 1) {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    } else {
        work();
    }

    EvalReport report;
    for (std::size_t i = 0; i < n; ++i) {
        if (skipped[i]) {
            ++report.excluded;
            continue;
        }
        report.rows.push_back({split.indices[i], split.params[i], errors[i]});
        report.sorted_nrmse.push_back(errors[i]);
    }
    if (report.rows.empty()) raise_invalid("evaluate: every split sample had zero energy");
    std::sort(report.sorted_nrmse.begin(), report.sorted_nrmse.end());
    if (report.excluded > 0)
        log_info("evaluate: excluded " + std::to_string(report.excluded) +
                 " zero-energy reference samples");

    for (int f = 0; f < 8; ++f) {
        ParamCorrelation pc;
        pc.name = ChannelParams::field_names()[static_cast<std::size_t>(f)];
        std::vector<double> xs, ys;
        xs.reserve(report.rows.size());
        ys.reserve(report.rows.size());
        for (const auto& row : report.rows) {
            xs.push_back(row.params.field(f));
            ys.push_back(row.nrmse);
        }
        double mean = 0.0;
        for (double v : xs) mean += v;
        pc.mean = mean / static_cast<double>(xs.size());
        try {
            pc.corr = pearson(xs, ys);
            pc.valid = true;
        } catch (const error&) {
            pc.valid = false;  // constant column renders as n/a
        }
        report.correlations.push_back(pc);
    }
    return report;
}

namespace {

std::string format_g(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::string cdf_svg(const Ecdf& ecdf) {
    const int width = 640, height = 420;
    const int ml = 60, mr = 20, mt = 20, mb = 50;
    const double x_max = std::max(ecdf.sorted().back() * 1.05, 1e-12);
    const auto px = [&](double v) { return ml + v / x_max * (width - ml - mr); };
    const auto py = [&](double f) { return height - mb - f * (height - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << py(0.0) << "\" x2=\"" << width - mr << "\" y2=\""
       << py(0.0) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << py(0.0) << "\" x2=\"" << ml << "\" y2=\"" << mt
       << "\" stroke=\"black\"/>\n";
    // step polyline
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    double prev_f = 0.0;
    for (std::size_t i = 0; i < ecdf.sorted().size(); ++i) {
        const double v = ecdf.sorted()[i];
        os << px(v) << ',' << py(prev_f) << ' ';
        prev_f = ecdf.fraction(i);
        os << px(v) << ',' << py(prev_f) << ' ';
    }
    os << "\"/>\n";
    // 90th percentile guides
    const double p90 = ecdf.percentile(0.9);
    os << "<line x1=\"" << ml << "\" y1=\"" << py(0.9) << "\" x2=\"" << px(p90) << "\" y2=\""
       << py(0.9) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<line x1=\"" << px(p90) << "\" y1=\"" << py(0.0) << "\" x2=\"" << px(p90) << "\" y2=\""
       << py(0.9) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << px(p90) + 4 << "\" y=\"" << py(0.9) - 6 << "\" font-size=\"12\">p90 = "
       << format_g(p90) << "</text>\n";
    os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
       << "\" font-size=\"13\" text-anchor=\"middle\">NRMSE</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
       << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (mt + height - mb) / 2
       << ")\" text-anchor=\"middle\">fraction</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ostringstream os;
        os << "index";
        for (const auto& name : ChannelParams::field_names()) os << ',' << name;
        os << ",nrmse\n";
        for (const auto& row : report.rows) {
            os << row.index;
            for (int f = 0; f < 8; ++f) os << ',' << format_g(row.params.field(f));
            os << ',' << format_g(row.nrmse) << '\n';
        }
        write_text_file(out_dir / "samples.csv", os.str());
    }
    {
        const Ecdf ecdf(report.sorted_nrmse);
        std::ostringstream os;
        os << "value,fraction\n";
        for (std::size_t i = 0; i < ecdf.sorted().size(); ++i)
            os << format_g(ecdf.sorted()[i]) << ',' << format_g(ecdf.fraction(i)) << '\n';
        write_text_file(out_dir / "cdf.csv", os.str());
        write_text_file(out_dir / "cdf.svg", cdf_svg(ecdf));
    }
    {
        std::ostringstream os;
        os << "ParamName,ParamMean,CorrWithNRMSE\n";
        for (const auto& pc : report.correlations) {
            os << pc.name << ',' << format_g(pc.mean) << ','
               << (pc.valid ? format_g(pc.corr) : std::string("n/a")) << '\n';
        }
        write_text_file(out_dir / "correlations.csv", os.str());
    }
}

}  // namespace mcduct
