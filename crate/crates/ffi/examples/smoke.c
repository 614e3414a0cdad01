#include <stdio.h>
#include <string.h>

#include "negforge.h"

static const char *CONLLU =
    "# text = She was eating an apple.\n"
    "1\tShe\tshe\tPRON\t_\t_\t3\tnsubj\t_\t_\n"
    "2\twas\tbe\tAUX\t_\t_\t3\taux\t_\t_\n"
    "3\teating\teat\tVERB\t_\t_\t0\troot\t_\t_\n"
    "4\tan\ta\tDET\t_\t_\t5\tdet\t_\t_\n"
    "5\tapple\tapple\tNOUN\t_\t_\t3\tobj\t_\tSpaceAfter=No\n"
    "6\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n";

#define CHECK(call)                                                        \
    do {                                                                   \
        NfStatus s_ = (call);                                              \
        if (s_ != NF_STATUS_OK) {                                          \
            fprintf(stderr, "%s failed (%d): %s\n", #call, s_, nf_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    NfCorpus *corpus = NULL;
    CHECK(nf_corpus_parse_conllu(CONLLU, &corpus));
    if (nf_corpus_len(corpus) != 1) {
        return 1;
    }
    char *masks = NULL;
    CHECK(nf_corpus_propose_masks_json(corpus, 0, NULL, &masks));
    printf("masks: %.60s...\n", masks);
    nf_string_free(masks);
    nf_corpus_free(corpus);

    NfFilter *filter = NULL;
    CHECK(nf_filter_new(NULL, &filter));
    char *kept = NULL;
    CHECK(nf_filter_run_json(filter, "She was eating an apple.",
                             "[\"She wasn't eating an apple.\", \"She was eating an apple.\"]", &kept));
    if (strstr(kept, "wasn't") == NULL) {
        return 1;
    }
    nf_string_free(kept);
    nf_filter_free(filter);

    double d = 0.0;
    CHECK(nf_norm_levenshtein("kitten", "sitting", NF_DISTANCE_UNIT_CHAR, &d));
    printf("nld: %.4f\n", d);

    double ppl = 0.0;
    double lps[3] = {-0.6931471805599453, -0.6931471805599453, -0.6931471805599453};
    CHECK(nf_perplexity(lps, 3, &ppl));
    printf("ppl: %.6f\n", ppl);

    if (nf_self_bleu("[\"one\"]", 4, &d) != NF_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("expected error: %s\n", nf_last_error());
    printf("version %s ok\n", nf_version());
    return 0;
}
