#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lipbench::cli {

using Args = std::vector<std::string>;

int cmd_nfr(const Args& args, std::ostream& out);
int cmd_cover(const Args& args, std::ostream& out);
int cmd_train(const Args& args, std::ostream& out);
int cmd_scale(const Args& args, std::ostream& out);
int cmd_pca(const Args& args, std::ostream& out);
int cmd_smooth(const Args& args, std::ostream& out);
int cmd_nndist(const Args& args, std::ostream& out);

}  // namespace lipbench::cli
