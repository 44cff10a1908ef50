#ifndef CIF_EVAL_HPP
#define CIF_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "cif/types.hpp"

namespace cif {

/// Mann-Whitney AUROC with midrank tie handling. Labels are 0/1 and both
/// classes must be present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Area under the per-region-overlap curve, integrated over
/// FPR in [0, fpr_limit] and normalized by fpr_limit. Ground-truth regions
/// are 8-connected components; thresholds sweep the distinct score values,
/// subsampled to at most 512 quantile-spaced levels for large inputs.
double aupro(const std::vector<MatrixXd>& pixel_maps, const std::vector<ForegroundMask>& gt_masks,
             double fpr_limit = 0.3);

struct EvalSample {
    std::string id;
    Label label = Label::Normal;
    double image_score = 0.0;
    MatrixXd pixel_scores;
    std::optional<ForegroundMask> gt_mask;  // absent = no anomalous pixels
};

struct EvalReport {
    std::string class_name;
    double i_auroc = 0.0;
    double p_auroc = 0.0;
    double aupro = 0.0;
    int n_test = 0;
    double fpr_limit = 0.3;
};

EvalReport evaluate_run(const std::string& class_name, const std::vector<EvalSample>& samples,
                        double fpr_limit = 0.3);

}  // namespace cif

#endif
