#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcduct/dataset.hpp"
#include "mcduct/train.hpp"

namespace mcduct {

/// sqrt(sum (pred - ref)^2) / sqrt(sum ref^2). The denominator is the
/// reference energy only. Throws for a zero-energy reference.
double nrmse(const std::vector<double>& ref, const std::vector<double>& pred);

/// Right-continuous empirical CDF: fraction i/n at the i-th order statistic;
/// percentile(q) is the lowest value whose fraction reaches q.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> values);
    const std::vector<double>& sorted() const { return sorted_; }
    double fraction(std::size_t i) const;  // i = 0-based order statistic
    double percentile(double q) const;

private:
    std::vector<double> sorted_;
};

/// Sample Pearson correlation. Throws if either input is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct EvalRow {
    int index;  // dataset index
    ChannelParams params;
    double nrmse;
};

struct ParamCorrelation {
    std::string name;
    double mean = 0.0;
    double corr = 0.0;
    bool valid = false;  // false renders as n/a (constant column)
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<double> sorted_nrmse;
    std::vector<ParamCorrelation> correlations;
    int excluded = 0;  // zero-energy references skipped upstream

    double percentile(double q) const { return Ecdf(sorted_nrmse).percentile(q); }
};

/// Predicts every split sample and assembles the error statistics.
EvalReport evaluate(const ModelBundle& bundle, const SplitData& split, int workers = 1);

/// Writes samples.csv, cdf.csv, correlations.csv and cdf.svg.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace mcduct
