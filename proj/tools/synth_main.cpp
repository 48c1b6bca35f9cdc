// Writes a planted-signal fixture: corpus, evidence store, similarity scores
// and a matching config file.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "veritrace/synth.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Generate a planted-signal fixture"};
  veritrace::SynthSpec spec;
  std::string out_dir;
  std::string engine = "bing_visual";
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--posts", spec.posts, "Number of posts");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--events", spec.events, "Number of events (1-8)");
  app.add_option("--engine", engine, "Engine recorded in the evidence store");
  app.add_option("--fake-title-p", spec.fake_title_phrase_p, "Fake-phrase probability for fake-post titles");
  app.add_option("--real-title-p", spec.real_title_phrase_p, "Fake-phrase probability for real-post titles");
  CLI11_PARSE(app, argc, argv);

  try {
    spec.engine = veritrace::parse_engine(engine);
    const veritrace::SynthDataset data = veritrace::generate_planted(spec);
    fs::create_directories(out_dir);
    veritrace::save_corpus(data.corpus, fs::path(out_dir) / "corpus.tsv", veritrace::CorpusFormat::vmu_tsv);
    data.store.save(fs::path(out_dir) / "evidence.jsonl");
    {
      std::ofstream scores(fs::path(out_dir) / "scores.tsv", std::ios::binary);
      data.scores.write(scores);
    }
    std::ofstream cfg(fs::path(out_dir) / "veritrace.toml", std::ios::binary);
    cfg << "seed = " << spec.seed << "\n\n"
        << "[paths]\ncorpus = \"corpus.tsv\"\ncorpus_format = \"vmu_tsv\"\nevidence = \"evidence.jsonl\"\n"
        << "scores = \"scores.tsv\"\noutput_dir = \"out\"\n\n"
        << "[evidence]\nengine = \"" << engine << "\"\n\n"
        << "[similarity]\nscorer = \"external_file\"\nthreshold = " << spec.threshold << "\n";
    std::cout << "wrote " << data.corpus.size() << " posts, " << data.store.size() << " evidence records, "
              << data.scores.size() << " scored pairs to " << out_dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "veritrace_synth: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
