#include "gma/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

gma::RunConfig load_config_or_die(const std::string& path) {
  return gma::parse_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided manifold alignment with twin autoencoders"};
  app.require_subcommand(1);

  std::string config_path;
  std::string embedding_path;
  std::string model_path;
  std::string input_csv;
  std::string output_csv;
  std::string domain = "X";
  std::string report_csv;
  std::string harness;
  std::string output_svg;

  auto* split = app.add_subcommand("split", "Simulate a two-domain split");
  split->add_option("--config", config_path, "JSON run config")->required();

  auto* align = app.add_subcommand("align", "Run an alignment method");
  align->add_option("--config", config_path, "JSON run config")->required();

  auto* train = app.add_subcommand("train", "Train the twin autoencoders");
  train->add_option("--config", config_path, "JSON run config")->required();
  train->add_option("--embedding", embedding_path, "embedding.csv from align")
      ->required();

  auto* extend = app.add_subcommand("extend", "Embed new points");
  extend->add_option("--config", config_path, "JSON run config")->required();
  extend->add_option("--model", model_path, "model.json from train")
      ->required();
  extend->add_option("--input", input_csv, "points CSV")->required();
  extend->add_option("--domain", domain, "X or Y");
  extend->add_option("--out", output_csv, "output coords CSV")->required();

  auto* crossmap = app.add_subcommand("crossmap",
                                      "Map points to the other domain");
  crossmap->add_option("--config", config_path, "JSON run config")->required();
  crossmap->add_option("--model", model_path, "model.json from train")
      ->required();
  crossmap->add_option("--input", input_csv, "points CSV")->required();
  crossmap->add_option("--from", domain, "source domain, X or Y");
  crossmap->add_option("--out", output_csv, "output CSV")->required();

  auto* eval = app.add_subcommand("eval", "Run an experiment harness");
  eval->add_option("--config", config_path, "JSON run config")->required();

  auto* plot = app.add_subcommand("plot", "Render SVG charts from a report");
  plot->add_option("--report", report_csv, "report.csv from eval")
      ->required();
  plot->add_option("--harness", harness,
                   "lambda-sweep|embedding-fit|baseline|mapping")
      ->required();
  plot->add_option("--out", output_svg, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) {
      return gma::cmd_split(load_config_or_die(config_path));
    }
    if (align->parsed()) {
      return gma::cmd_align(load_config_or_die(config_path));
    }
    if (train->parsed()) {
      return gma::cmd_train(load_config_or_die(config_path), embedding_path);
    }
    if (extend->parsed()) {
      return gma::cmd_extend(load_config_or_die(config_path), model_path,
                             input_csv, domain, output_csv);
    }
    if (crossmap->parsed()) {
      return gma::cmd_crossmap(load_config_or_die(config_path), model_path,
                               input_csv, domain, output_csv);
    }
    if (eval->parsed()) {
      return gma::cmd_eval(load_config_or_die(config_path));
    }
    if (plot->parsed()) {
      return gma::cmd_plot(report_csv, harness, output_svg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gma::exit_code_for(e);
  }
  return 0;
}
