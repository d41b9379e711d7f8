// forge: synthetic training data generation and segmentation evaluation.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "forge/commands.hpp"
#include "forge/error.hpp"
#include "forge/nifti.hpp"
#include "forge/phantom.hpp"
#include "forge/version.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kPartial = 3 };

int exit_code_for(const forge::Error& e) {
  if (dynamic_cast<const forge::ConfigError*>(&e) || dynamic_cast<const forge::TaxonomyError*>(&e) ||
      dynamic_cast<const forge::ParameterError*>(&e)) {
    return kUsage;
  }
  return kData;
}

std::set<forge::Label> parse_classes(const std::string& list) {
  std::set<forge::Label> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(static_cast<forge::Label>(std::stoul(item)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic whole-head MRI training data and segmentation evaluation"};
  app.set_version_flag("--version", forge::kToolVersion);
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic image/label dataset");
  std::string gen_config;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_workers, gen_crop, gen_samples;
  std::optional<std::string> gen_out;
  bool gen_quiet = false;
  gen->add_option("--config", gen_config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Override master_seed");
  gen->add_option("--workers", gen_workers, "Override worker count (0 = all cores)");
  gen->add_option("--crop", gen_crop, "Output edge length in training voxels (0 = full field)");
  gen->add_option("--num-samples", gen_samples, "Override num_samples");
  gen->add_option("--out", gen_out, "Override output_dir");
  gen->add_flag("--quiet", gen_quiet, "No per-sample progress");

  // superres
  auto* sr = app.add_subcommand("superres", "Super-resolve one label template");
  std::string sr_template, sr_out, sr_taxonomy = forge::kBuiltinTaxonomy, sr_interp = "windowed_sinc";
  double sr_target = 0.25, sr_sigma = 0.5;
  sr->add_option("--template", sr_template, "Raw label template (NIfTI)")->required()->check(CLI::ExistingFile);
  sr->add_option("--taxonomy", sr_taxonomy, "Taxonomy JSON or builtin:whole_head");
  sr->add_option("--out", sr_out, "Output NIfTI")->required();
  sr->add_option("--target", sr_target, "Target voxel size in mm");
  sr->add_option("--sigma", sr_sigma, "Gaussian smoothing sigma in mm");
  sr->add_option("--interpolation", sr_interp, "windowed_sinc, linear or nearest");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions listed in a CSV manifest");
  std::string ev_manifest, ev_mode = "accuracy", ev_out = "eval_out", ev_classes, ev_form = "fraction";
  forge::EvaluateOptions ev_opt;
  int ev_atrophy_class = 1;
  ev->add_option("--manifest", ev_manifest, "CSV with subject_id,pred_path,ref_path[,pair_path,level,model]")
      ->required()->check(CLI::ExistingFile);
  ev->add_option("--mode", ev_mode, "accuracy, consistency or atrophy")
      ->check(CLI::IsMember({"accuracy", "consistency", "atrophy"}));
  ev->add_option("--out", ev_out, "Output directory");
  ev->add_option("--classes", ev_classes, "Comma-separated class ids (default: all present)");
  ev->add_option("--atrophy-class", ev_atrophy_class, "Class whose volume is tracked")->check(CLI::Range(0, 65535));
  ev->add_option("--atrophy-form", ev_form, "fraction (default) or product")
      ->check(CLI::IsMember({"fraction", "product"}));
  ev->add_flag("--compare", ev_opt.compare_models, "Bonferroni-corrected Wilcoxon across models");
  ev->add_option("--alpha", ev_opt.alpha, "Family significance level");
  ev->add_option("--workers", ev_opt.workers, "Worker threads (0 = all cores)");

  // validate
  auto* val = app.add_subcommand("validate", "Check a pipeline config");
  std::string val_config;
  val->add_option("--config", val_config, "Pipeline config (JSON)")->required();

  // phantom
  auto* ph = app.add_subcommand("phantom", "Write a procedural raw-label head template");
  std::string ph_out;
  std::size_t ph_dims = 96;
  double ph_voxel = 0.5;
  std::uint64_t ph_seed = 0;
  ph->add_option("--out", ph_out, "Output NIfTI")->required();
  ph->add_option("--dims", ph_dims, "Edge length in voxels");
  ph->add_option("--voxel-size", ph_voxel, "Voxel size in mm");
  ph->add_option("--seed", ph_seed, "Folding pattern seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      forge::PipelineConfig config = forge::load_pipeline_config(gen_config);
      if (gen_seed) config.master_seed = *gen_seed;
      if (gen_workers) config.workers = *gen_workers;
      if (gen_crop) config.generator.crop = *gen_crop;
      if (gen_samples) config.num_samples = *gen_samples;
      if (gen_out) {
        config.output_dir = std::filesystem::absolute(*gen_out).string();
      }
      const auto report = forge::cmd_generate(config, gen_quiet ? nullptr : &std::cerr);
      std::cout << "generated " << report.generated << ", kept " << report.skipped << ", failed "
                << report.manifest.errors.size() << "\n";
      return report.manifest.errors.empty() ? kOk : kPartial;
    }
    if (*sr) {
      forge::PipelineConfig c;
      c.taxonomy_path = sr_taxonomy;
      forge::ResampleSpec spec;
      spec.target_voxel_size = {sr_target, sr_target, sr_target};
      spec.smoothing_sigma_mm = sr_sigma;
      spec.interpolation = forge::parse_interpolation(sr_interp);
      spec.validate();
      forge::cmd_superres(sr_template, forge::load_taxonomy(c), sr_out, spec);
      return kOk;
    }
    if (*ev) {
      ev_opt.classes = parse_classes(ev_classes);
      ev_opt.atrophy_class = static_cast<forge::Label>(ev_atrophy_class);
      ev_opt.atrophy_form = ev_form == "product" ? forge::AtrophyErrorForm::volume_ratio_product
                                                 : forge::AtrophyErrorForm::fraction_ratio;
      const auto report =
          forge::cmd_evaluate(ev_manifest, forge::parse_eval_mode(ev_mode), ev_out, ev_opt);
      for (const auto& f : report.failures) {
        std::cerr << "row " << f.row << " (" << f.subject_id << "): " << f.message << "\n";
      }
      for (const auto& p : report.outputs) std::cout << p.string() << "\n";
      return report.failures.empty() ? kOk : kPartial;
    }
    if (*val) {
      return forge::cmd_validate_config(val_config, std::cout, std::cerr) == 0 ? kOk : kUsage;
    }
    if (*ph) {
      forge::save_volume(forge::make_head_phantom({ph_dims, ph_dims, ph_dims},
                                                  {ph_voxel, ph_voxel, ph_voxel}, ph_seed),
                         ph_out);
      return kOk;
    }
  } catch (const forge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
