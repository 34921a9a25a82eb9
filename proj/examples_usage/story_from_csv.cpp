// Builds a short data story from a CSV file and writes it as JSON plus an SVG
// factsheet.
//
//   story_from_csv data.csv [length] [seed]

#include <fstream>
#include <iostream>
#include <sstream>

#include "factweaver/factweaver.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: story_from_csv <data.csv> [length] [seed]\n";
        return 2;
    }
    std::ifstream in(argv[1], std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << argv[1] << "\n";
        return 1;
    }
    std::ostringstream bytes;
    bytes << in.rdbuf();

    using namespace factweaver;
    try {
        const DataTable table = load_csv(bytes.str());
        for (const auto& f : table.schema()) std::cout << f.name << ": " << to_string(f.kind) << "\n";

        GenerationParams params;
        params.goal.max_length = argc > 2 ? std::stoul(argv[2]) : 5;
        params.goal.iteration_budget = 20;
        params.seed = argc > 3 ? std::stoull(argv[3]) : 1;
        params.chart_diversity = 0.4;

        const StoryDocument doc = generate_document(table, params, nullptr, "example", argv[1]);
        std::cout << "\n" << doc.summary << "\n\n";
        for (std::size_t i = 0; i < doc.entries.size(); ++i) {
            std::cout << i + 1 << ". [" << to_string(doc.story.facts[i].type) << ", "
                      << to_string(doc.entries[i].chart.chart) << "] " << doc.entries[i].chart.caption << "\n";
            if (i + 1 < doc.entries.size()) std::cout << "   -> " << to_string(doc.story.relations[i]) << "\n";
        }
        std::cout << "\nreward " << format_fixed(doc.story.reward, 4) << "\n";

        std::ofstream("story.json") << to_json(doc).dump(2) << "\n";
        std::ofstream("factsheet.svg") << render_document(doc, table, RenderMode::factsheet);
        std::cout << "wrote story.json and factsheet.svg\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
