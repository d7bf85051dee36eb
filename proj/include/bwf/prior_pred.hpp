#ifndef BWF_PRIOR_PRED_HPP
#define BWF_PRIOR_PRED_HPP

#include <string>
#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/models.hpp"
#include "bwf/rng.hpp"

namespace bwf {

/// Datasets simulated from the joint prior at a template's x values and
/// groups, one "page" each, with the parameters that produced them.
struct FlipBook {
  std::vector<std::vector<double>> datasets;  // y on the log scale
  std::string prior_label;
  std::vector<NamedValues> per_dataset_params;  // constrained scale
};

/// Draw parameters from the priors, then y from the likelihood, n_datasets
/// times. An InvGamma tau prior is drawn as a variance. Zero-scale priors
/// act as point masses.
FlipBook prior_flipbook(const ModelSpec& model, const Dataset& templ, int n_datasets,
                        RngStream& rng);

struct PriorTailSummary {
  std::vector<double> max_abs;  // per dataset
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> sd;
  double max_abs_q05 = 0.0;
  double max_abs_q50 = 0.0;
  double max_abs_q95 = 0.0;
  double threshold = 0.0;  // log scale
  std::size_t datasets_exceeding = 0;
  std::size_t points_exceeding = 0;
};

PriorTailSummary prior_tail_summary(const FlipBook& book, double log_threshold);
/// Threshold log(22000), i.e. 22,000 ug/m3 on the natural scale.
PriorTailSummary prior_tail_summary(const FlipBook& book);

std::string flipbook_to_json(const FlipBook& book);
std::string summary_to_json(const PriorTailSummary& summary);

}  // namespace bwf

#endif  // BWF_PRIOR_PRED_HPP
